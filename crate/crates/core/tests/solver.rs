use std::sync::Arc;

use exactflux::assembly::ConductivityField;
use exactflux::linalg::LinearSolverConfig;
use exactflux::mesh::{build_structured, perturb_interior, tag_boundary, BoundaryTag, BoundaryTags, SimplicialMesh};
use exactflux::rbm::ReducedBasis;
use exactflux::solver::{
    relative_errors, solve_fom, solve_fom_system, solve_three_step, step1_conservative_flux, step2_correction,
    step2_operator, three_step, Backend, CellOperator, FomMethod, Lumping, Physics, ProblemSpec, SingleDomain,
};
use exactflux::sparse::{dot, matvec};
use exactflux::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn full() -> Backend<'static> {
    Backend::Full(LinearSolverConfig::direct())
}

fn cfg() -> LinearSolverConfig {
    LinearSolverConfig::direct()
}

fn mesh(dim: usize, n: usize, seed: u64) -> Arc<SimplicialMesh> {
    let m = build_structured(dim, n, [0.0; 3], [1.0; 3]).unwrap();
    Arc::new(if seed == 0 { m } else { perturb_interior(&m, 0.15 / n as f64, seed).unwrap() })
}

/// Flux wall at x = 0, pressure elsewhere.
fn mixed_tags(m: &SimplicialMesh) -> BoundaryTags {
    tag_boundary(m, |x, _| Some(if x[0] < 1e-12 { BoundaryTag::Flux } else { BoundaryTag::Pressure })).unwrap()
}

fn random_physics(domain: &SingleDomain, rng: &mut ChaCha8Rng, lumping: Lumping) -> Physics {
    let m = domain.mesh();
    let k = ConductivityField::Scalar((0..m.n_cells()).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect());
    let alpha: [f64; 3] = [rng.random(), rng.random(), rng.random()];
    let fbar: f64 = rng.random_range(-1.0..1.0);
    let mut physics = domain
        .physics(&k, &|x| fbar * (1.0 + x[0]), &|x| alpha[0] * x[0] + alpha[1] * x[1] + alpha[2] * x[2], lumping)
        .unwrap();
    if domain.complex().pressure_gauge() {
        let mean = physics.source.iter().sum::<f64>() / physics.source.len() as f64;
        physics.source.iter_mut().for_each(|f| *f -= mean);
    }
    physics
}

fn domains() -> Vec<SingleDomain> {
    let mut out = Vec::new();
    for (dim, n) in [(2, 6), (3, 3)] {
        for seed in [0, 5] {
            let m = mesh(dim, n, seed);
            out.push(SingleDomain::new(m.clone(), BoundaryTags::uniform(&m, BoundaryTag::Pressure)).unwrap());
            out.push(SingleDomain::new(m.clone(), BoundaryTags::uniform(&m, BoundaryTag::Flux)).unwrap());
            out.push(SingleDomain::new(m.clone(), mixed_tags(&m)).unwrap());
        }
    }
    out
}

#[test]
fn three_step_matches_saddle_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in domains() {
        for lumping in [Lumping::Tpfa, Lumping::TpfaReference, Lumping::RowSum] {
            let physics = random_physics(&d, &mut rng, lumping);
            let cell = CellOperator::new(d.complex(), &physics.lumped, &cfg()).unwrap();
            let ts = three_step(d.complex(), &physics, &cell, full()).unwrap();
            let fom = solve_fom_system(d.complex(), &physics, FomMethod::Direct).unwrap();
            let (ep, eq) = relative_errors(d.complex(), &ts, &fom);
            assert!(ep < 1e-8 && eq < 1e-8, "{:?} {lumping:?}: {ep:e} {eq:e}", d.tags().regime());
            assert!(ts.diagnostics.mass.relative < 1e-13);
            assert!(fom.diagnostics.mass.relative < 1e-13, "{:e}", fom.diagnostics.mass.relative);
        }
    }
}

#[test]
fn schur_route_agrees_with_block_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for d in domains() {
        let physics = random_physics(&d, &mut rng, Lumping::Tpfa);
        let a = solve_fom_system(d.complex(), &physics, FomMethod::Direct).unwrap();
        let b = solve_fom_system(d.complex(), &physics, FomMethod::SchurCg(LinearSolverConfig::cg())).unwrap();
        let (ep, eq) = relative_errors(d.complex(), &b, &a);
        assert!(ep < 1e-9 && eq < 1e-9, "{ep:e} {eq:e}");
    }
}

#[test]
fn cg_and_direct_backends_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in domains() {
        let physics = random_physics(&d, &mut rng, Lumping::Tpfa);
        let c1 = CellOperator::new(d.complex(), &physics.lumped, &cfg()).unwrap();
        let c2 = CellOperator::new(d.complex(), &physics.lumped, &LinearSolverConfig::cg()).unwrap();
        let a = three_step(d.complex(), &physics, &c1, full()).unwrap();
        let b = three_step(d.complex(), &physics, &c2, Backend::Full(LinearSolverConfig::cg())).unwrap();
        let (ep, eq) = relative_errors(d.complex(), &b, &a);
        assert!(ep < 1e-9 && eq < 1e-9, "{ep:e} {eq:e}");
        assert!(b.diagnostics.mass.relative < 1e-13);
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    for d in domains() {
        let k = ConductivityField::uniform(d.mesh().n_cells(), 2.0);
        let physics = d.physics(&k, &|_| 0.0, &|_| 0.0, Lumping::Tpfa).unwrap();
        let cell = CellOperator::new(d.complex(), &physics.lumped, &cfg()).unwrap();
        let (qf, _) = step1_conservative_flux(d.complex(), &physics, &cell).unwrap();
        assert!(qf.iter().all(|&v| v == 0.0));
        let s = three_step(d.complex(), &physics, &cell, full()).unwrap();
        assert!(s.flux.iter().chain(&s.pressure).chain(&s.potential).all(|v| v.abs() < 1e-300));
    }
}

#[test]
fn linear_pressure_is_reproduced() {
    // K ≡ 1, f = 0, p = a·x: the mixed flux is the constant −a and cell
    // pressures are the centroid values
    for (dim, seed) in [(2, 0), (2, 9), (3, 0), (3, 4)] {
        let a = if dim == 2 { [0.3, -0.7, 0.0] } else { [0.3, -0.7, 0.45] };
        let m = mesh(dim, 4, seed);
        let spec = ProblemSpec::new(m.clone(), BoundaryTags::uniform(&m, BoundaryTag::Pressure), ConductivityField::uniform(m.n_cells(), 1.0))
            .with_linear_pressure(a);
        let fom = solve_fom(&spec, FomMethod::Direct).unwrap();
        let ts = solve_three_step(&spec, full(), &cfg()).unwrap();
        let d = spec.domain().unwrap();
        for c in 0..m.n_cells() {
            let x = m.centroid(dim, c);
            let exact = a[0] * x[0] + a[1] * x[1] + a[2] * x[2];
            assert!((fom.pressure[c] - exact).abs() < 1e-12, "fom {c}");
            assert!((ts.pressure[c] - exact).abs() < 1e-10, "three-step {c}");
        }
        let q = d.prolong_flux(&ts.flux);
        for f in 0..m.n_faces() {
            let (c, _) = m.face_cells(f);
            let j = m.local_face(c, f).unwrap();
            let s = f64::from(m.cell_face_signs(c)[j]);
            let n = m.outward_normal(c, f).unwrap();
            let expected = -s * (a[0] * n[0] + a[1] * n[1] + a[2] * n[2]) * m.measure(dim - 1, f);
            assert!((q[f] - expected).abs() < 1e-10, "face {f}: {} vs {expected}", q[f]);
        }
    }
}

#[test]
fn exact_flux_needs_no_correction() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in domains() {
        let physics = random_physics(&d, &mut rng, Lumping::Tpfa);
        let fom = solve_fom_system(d.complex(), &physics, FomMethod::Direct).unwrap();
        let (r, _) = step2_correction(d.complex(), &physics, &fom.flux, full()).unwrap();
        let cr = d.complex().curl_of(&r);
        let size = d.complex().flux_l2(&fom.flux).max(1.0);
        assert!(d.complex().flux_l2(&cr) < 1e-9 * size);
    }
}

#[test]
fn two_cell_source_sink() {
    let m = mesh(2, 1, 0);
    let d = SingleDomain::new(m.clone(), BoundaryTags::uniform(&m, BoundaryTag::Flux)).unwrap();
    let k = ConductivityField::uniform(2, 1.0);
    let mut physics = d.physics(&k, &|_| 0.0, &|_| 0.0, Lumping::Tpfa).unwrap();
    physics.source = vec![1.0, -1.0];
    let cell = CellOperator::new(d.complex(), &physics.lumped, &cfg()).unwrap();
    let (qf, _) = step1_conservative_flux(d.complex(), &physics, &cell).unwrap();
    // only the diagonal survives the flux boundary, and it carries everything
    assert_eq!(qf.len(), 1);
    assert!((qf[0].abs() - 1.0).abs() < 1e-15);
    assert_eq!(d.complex().divergence(&qf), vec![1.0, -1.0]);
}

#[test]
fn neumann_incompatible_source_is_rejected() {
    let m = mesh(2, 3, 0);
    let spec = ProblemSpec::new(m.clone(), BoundaryTags::uniform(&m, BoundaryTag::Flux), ConductivityField::uniform(m.n_cells(), 1.0))
        .with_source(|_| 1.0);
    assert!(matches!(solve_three_step(&spec, full(), &cfg()), Err(Error::Incompatible(_))));
    assert!(matches!(solve_fom(&spec, FomMethod::Direct), Err(Error::Incompatible(_))));
}

#[test]
fn neumann_pressure_has_zero_mean() {
    let m = mesh(3, 2, 3);
    let spec = ProblemSpec::new(m.clone(), BoundaryTags::uniform(&m, BoundaryTag::Flux), ConductivityField::uniform(m.n_cells(), 1.0))
        .with_source(|x| (2.0 * std::f64::consts::PI * x[0]).cos());
    // the centroid rule makes ∫f only approximately zero; fix the cell data directly
    let d = spec.domain().unwrap();
    let mut physics = spec.physics(&d).unwrap();
    let mean = physics.source.iter().sum::<f64>() / physics.source.len() as f64;
    physics.source.iter_mut().for_each(|f| *f -= mean);
    let cell = CellOperator::new(d.complex(), &physics.lumped, &cfg()).unwrap();
    let s = three_step(d.complex(), &physics, &cell, full()).unwrap();
    assert!(dot(&s.pressure, d.complex().cell_measure()).abs() < 1e-13);
}

#[test]
fn empty_basis_keeps_step_one_flux() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for d in domains() {
        let physics = random_physics(&d, &mut rng, Lumping::Tpfa);
        let cell = CellOperator::new(d.complex(), &physics.lumped, &cfg()).unwrap();
        let basis = ReducedBasis::empty(d.complex().n_potential());
        let s = three_step(d.complex(), &physics, &cell, Backend::Reduced(&basis)).unwrap();
        assert_eq!(s.flux, s.tpfa_flux);
        assert!(s.diagnostics.mass.relative < 1e-13);
    }
}

#[test]
fn step_operators_are_symmetric_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for d in domains() {
        let physics = random_physics(&d, &mut rng, Lumping::Tpfa);
        let a = step2_operator(d.complex(), &physics.flux_mass);
        for _ in 0..5 {
            let x: Vec<f64> = (0..a.rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..a.rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ax = matvec(&a, &x);
            let ay = matvec(&a, &y);
            assert!((dot(&ax, &y) - dot(&x, &ay)).abs() < 1e-10 * dot(&ax, &x).abs().max(1.0));
            assert!(dot(&ax, &x) > 0.0);
        }
    }
}

#[test]
fn pressure_scales_with_flux() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let m = mesh(2, 5, 2);
    let d = SingleDomain::new(m.clone(), BoundaryTags::uniform(&m, BoundaryTag::Pressure)).unwrap();
    let mut physics = random_physics(&d, &mut rng, Lumping::Tpfa);
    physics.boundary_rhs.iter_mut().for_each(|g| *g = 0.0);
    let cell = CellOperator::new(d.complex(), &physics.lumped, &cfg()).unwrap();
    let s = three_step(d.complex(), &physics, &cell, full()).unwrap();
    let q3: Vec<f64> = s.flux.iter().map(|q| 3.0 * q).collect();
    let p3 = exactflux::solver::step3_pressure(d.complex(), &physics, &cell, &q3).unwrap();
    for (a, b) in p3.iter().zip(&s.pressure) {
        assert!((a - 3.0 * b).abs() < 1e-12 * (1.0 + b.abs()));
    }
}

fn superposition_defect(dim: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = mesh(dim, 3, seed % 7 + 1);
    let d = SingleDomain::new(m.clone(), mixed_tags(&m)).unwrap();
    let p1 = random_physics(&d, &mut rng, Lumping::Tpfa);
    let mut p2 = random_physics(&d, &mut rng, Lumping::Tpfa);
    p2.flux_mass = p1.flux_mass.clone();
    p2.lumped = p1.lumped.clone();
    let mut sum = p1.clone();
    sum.source = p1.source.iter().zip(&p2.source).map(|(a, b)| a + 2.0 * b).collect();
    sum.boundary_rhs = p1.boundary_rhs.iter().zip(&p2.boundary_rhs).map(|(a, b)| a + 2.0 * b).collect();
    let cell = CellOperator::new(d.complex(), &p1.lumped, &cfg()).unwrap();
    let s1 = three_step(d.complex(), &p1, &cell, full()).unwrap();
    let s2 = three_step(d.complex(), &p2, &cell, full()).unwrap();
    let s = three_step(d.complex(), &sum, &cell, full()).unwrap();
    let scale = s.flux.iter().chain(&s.pressure).fold(1.0f64, |m, v| m.max(v.abs()));
    s.flux
        .iter()
        .zip(s1.flux.iter().zip(&s2.flux))
        .chain(s.pressure.iter().zip(s1.pressure.iter().zip(&s2.pressure)))
        .map(|(c, (a, b))| (c - a - 2.0 * b).abs())
        .fold(0.0, f64::max)
        / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conservation_for_random_instances(seed in 0u64..10_000, dim in 2usize..=3, regime in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = mesh(dim, if dim == 2 { 5 } else { 2 }, seed % 11);
        let tags = match regime {
            0 => BoundaryTags::uniform(&m, BoundaryTag::Pressure),
            1 => BoundaryTags::uniform(&m, BoundaryTag::Flux),
            _ => mixed_tags(&m),
        };
        let d = SingleDomain::new(m, tags).unwrap();
        let physics = random_physics(&d, &mut rng, Lumping::Tpfa);
        let cell = CellOperator::new(d.complex(), &physics.lumped, &cfg()).unwrap();
        let s = three_step(d.complex(), &physics, &cell, full()).unwrap();
        prop_assert!(s.diagnostics.mass.relative <= 1e-13);
        prop_assert!(s.diagnostics.mass_tpfa.unwrap().relative <= 1e-13);
        let fom = solve_fom_system(d.complex(), &physics, FomMethod::Direct).unwrap();
        let (ep, eq) = relative_errors(d.complex(), &s, &fom);
        prop_assert!(ep < 1e-8 && eq < 1e-8);
    }

    #[test]
    fn solution_is_linear_in_data(seed in 0u64..10_000, dim in 2usize..=3) {
        prop_assert!(superposition_defect(dim, seed) < 1e-10);
    }
}
