mod common;

use common::{gram_pod, max_principal_angle, random_matrix, random_orthonormal, rel_diff};
use exactflux::linalg::LinearSolverConfig;
use exactflux::rbm::{
    collect_snapshots, orthonormality_defect, pod_truncate, read_artifact, sample_latin_hypercube, write_artifact,
    Artifact, ArtifactMeta, LayeredModel, OnlineSolver, ParametricModel, ReducedBasis,
};
use exactflux::solver::{
    relative_errors, step1_conservative_flux, step2_correction, step2_operator, step2_rhs, Backend, CellOperator,
};
use exactflux::sparse::matvec;
use exactflux::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn cfg() -> LinearSolverConfig {
    LinearSolverConfig::direct()
}

fn layered_2d() -> LayeredModel {
    LayeredModel::new(2, 8).unwrap()
}

fn basis_for(model: &LayeredModel, n_s: usize, seed: u64, eps: f64) -> ReducedBasis {
    let samples = sample_latin_hypercube(n_s, model.ranges(), seed).unwrap();
    let s = collect_snapshots(model, &samples, &cfg(), 2).unwrap();
    pod_truncate(&s.matrix, eps).unwrap()
}

/// Full step-2 potential at `mu`, together with the operator and rhs.
fn full_correction(model: &LayeredModel, mu: &[f64]) -> (Vec<f64>, sprs::CsMat<f64>, Vec<f64>) {
    let c = model.complex();
    let physics = model.physics(mu).unwrap();
    let cell = CellOperator::new(c, &physics.lumped, &cfg()).unwrap();
    let (qf, _) = step1_conservative_flux(c, &physics, &cell).unwrap();
    let (r, _) = step2_correction(c, &physics, &qf, Backend::Full(cfg())).unwrap();
    (r, step2_operator(c, &physics.flux_mass), step2_rhs(c, &physics, &qf))
}

fn energy(a: &sprs::CsMat<f64>, x: &[f64]) -> f64 {
    x.iter().zip(matvec(a, x)).map(|(x, y)| x * y).sum::<f64>()
}

#[test]
fn pod_matches_both_oracles() {
    for (m, n, seed) in [(50, 6, 1), (120, 12, 2), (200, 20, 3)] {
        let s = random_matrix(m, n, seed);
        let b = pod_truncate(&s, 1e-7).unwrap();
        assert_eq!(b.n_modes(), n);
        assert!(orthonormality_defect(b.modes()) <= 1e-12);
        let svd = s.clone().svd(true, false);
        let mut lapack_like: Vec<f64> = svd.singular_values.iter().copied().collect();
        lapack_like.sort_by(|a, b| b.total_cmp(a));
        let (ug, sg) = gram_pod(&s);
        for k in 0..n {
            assert!((b.singular_values()[k] - lapack_like[k]).abs() < 1e-10);
            assert!((b.singular_values()[k] - sg[k]).abs() < 1e-10);
        }
        assert!(max_principal_angle(b.modes(), &svd.u.unwrap()) < 1e-8);
        assert!(max_principal_angle(b.modes(), &ug) < 1e-8);
    }
}

#[test]
fn pod_keeps_relative_accuracy_below_the_gram_floor() {
    // σ = 1, 1e-4, 1e-9: the Gram route cannot see the last one
    let q = random_orthonormal(40, 3, 8);
    let s = &q * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-4, 1e-9]));
    let b = pod_truncate(&s, 1e-12).unwrap();
    assert_eq!(b.n_modes(), 3);
    assert!((b.singular_values()[2] / 1e-9 - 1.0).abs() < 1e-6);
}

#[test]
fn one_snapshot_is_one_full_solve() {
    let model = layered_2d();
    let mu = vec![10.0, 0.3, 0.2, 0.9];
    let s = collect_snapshots(&model, std::slice::from_ref(&mu), &cfg(), 1).unwrap();
    assert_eq!(s.matrix.ncols(), 1);
    let (r, _, _) = full_correction(&model, &mu);
    assert_eq!(s.matrix.column(0).iter().copied().collect::<Vec<_>>(), r);
}

#[test]
fn duplicate_sample_duplicates_the_column_and_workers_do_not_matter() {
    let model = layered_2d();
    let mu = vec![1e-3, -0.5, 0.4, 0.1];
    let samples = vec![mu.clone(), vec![3.0, 0.0, 1.0, 0.0], mu];
    let a = collect_snapshots(&model, &samples, &cfg(), 1).unwrap();
    let b = collect_snapshots(&model, &samples, &cfg(), 3).unwrap();
    assert_eq!(a.matrix, b.matrix);
    assert_eq!(a.matrix.column(0), a.matrix.column(2));
}

#[test]
fn snapshot_failure_names_the_sample() {
    let model = layered_2d();
    let err = collect_snapshots(&model, &[vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 0.0]], &cfg(), 1).unwrap_err();
    assert!(matches!(&err, Error::Solver(m) if m.contains("snapshot 1")), "{err}");
}

#[test]
fn galerkin_residual_vanishes() {
    let model = layered_2d();
    let basis = basis_for(&model, 12, 3, 1e-7);
    let online = OnlineSolver::new(&model, basis.clone(), &cfg()).unwrap();
    let mu = [42.0, 0.7, 0.5, 0.25];
    let sol = online.solve(&mu).unwrap();
    let (_, a, b) = full_correction(&model, &mu);
    let ar = matvec(&a, &sol.potential);
    let res = DVector::from_iterator(ar.len(), ar.iter().zip(&b).map(|(x, y)| x - y));
    let proj = basis.modes().transpose() * res;
    let scale = (basis.modes().transpose() * DVector::from_column_slice(&b)).amax().max(1.0);
    assert!(proj.amax() <= 1e-11 * scale, "{:e}", proj.amax());
}

#[test]
fn energy_error_decreases_with_the_basis() {
    let model = layered_2d();
    let basis = basis_for(&model, 16, 5, 1e-12);
    let mu = [2e2, -0.4, 0.6, 0.3];
    let (r, a, _) = full_correction(&model, &mu);
    let mut last = f64::INFINITY;
    for m in [0, 1, 2, 4, 8, basis.n_modes()] {
        let sub = basis.truncated(m);
        let online = OnlineSolver::new(&model, sub, &cfg()).unwrap();
        let rm = online.solve(&mu).unwrap().potential;
        let e: Vec<f64> = r.iter().zip(&rm).map(|(a, b)| a - b).collect();
        let err = energy(&a, &e);
        assert!(err <= last * (1.0 + 1e-9) + 1e-28, "m = {m}: {err:e} > {last:e}");
        last = err;
    }
}

#[test]
fn empty_basis_gives_zero_correction() {
    let model = layered_2d();
    let online = OnlineSolver::new(&model, ReducedBasis::empty(model.complex().n_potential()), &cfg()).unwrap();
    let sol = online.solve(&[1.0, 1.0, 0.0, 0.0]).unwrap();
    assert!(sol.potential.iter().all(|&v| v == 0.0));
    assert_eq!(sol.flux, sol.tpfa_flux);
    assert!(sol.diagnostics.mass.relative <= 1e-13);
}

#[test]
fn complete_basis_is_exact() {
    let model = layered_2d();
    let n = model.complex().n_potential();
    let basis = ReducedBasis::new(DMatrix::identity(n, n), vec![1.0; n], 1e-7).unwrap();
    let online = OnlineSolver::new(&model, basis, &cfg()).unwrap();
    let mu = [1e-4, 0.2, 0.9, 0.1];
    let (r, _, _) = full_correction(&model, &mu);
    assert!(rel_diff(&online.solve(&mu).unwrap().potential, &r) <= 1e-10);
}

#[test]
fn snapshot_parameters_are_reproduced() {
    let model = layered_2d();
    let samples = sample_latin_hypercube(10, model.ranges(), 9).unwrap();
    let s = collect_snapshots(&model, &samples, &cfg(), 2).unwrap();
    let basis = pod_truncate(&s.matrix, 1e-7).unwrap();
    let online = OnlineSolver::new(&model, basis, &cfg()).unwrap();
    for (j, mu) in samples.iter().enumerate().step_by(3) {
        let r: Vec<f64> = s.matrix.column(j).iter().copied().collect();
        let rm = online.solve(mu).unwrap().potential;
        assert!(rel_diff(&rm, &r) <= 1e-8, "sample {j}: {:e}", rel_diff(&rm, &r));
        let fom = model.solve_fom(mu).unwrap();
        let (ep, eq) = relative_errors(model.complex(), &online.solve(mu).unwrap(), &fom);
        assert!(ep <= 1e-8 && eq <= 1e-8);
    }
}

#[test]
fn artifact_refused_by_another_mesh() {
    let model = layered_2d();
    let basis = basis_for(&model, 4, 1, 1e-7);
    let artifact = Artifact {
        basis,
        meta: ArtifactMeta { fingerprint: model.fingerprint(), ranges: model.ranges().to_vec() },
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("basis.rbm");
    write_artifact(&path, &artifact).unwrap();
    let loaded = read_artifact(&path).unwrap();
    assert_eq!(loaded, artifact);
    assert!(OnlineSolver::from_artifact(&model, loaded.clone(), &cfg()).is_ok());
    let other = LayeredModel::new(2, 9).unwrap();
    assert!(matches!(OnlineSolver::from_artifact(&other, loaded, &cfg()), Err(Error::ArtifactMismatch(_))));
}

#[test]
fn three_dimensional_reduced_solve_uses_the_penalty() {
    let model = LayeredModel::new(3, 3).unwrap();
    let basis = basis_for(&model, 8, 2, 1e-7);
    let online = OnlineSolver::new(&model, basis, &cfg()).unwrap();
    let sol = online.solve(&[5.0, 0.5, 0.1, 0.2, 0.3]).unwrap();
    assert!(sol.diagnostics.mass.relative <= 1e-13);
    assert!(sol.potential.iter().all(|v| v.is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn any_orthonormal_basis_conserves_mass(seed in 0u64..1000, width in 0usize..12, k in -5.0f64..5.0, f in -1.0f64..1.0) {
        let model = LayeredModel::new(2, 6).unwrap();
        let n = model.complex().n_potential();
        let modes = if width == 0 { DMatrix::zeros(n, 0) } else { random_orthonormal(n, width, seed) };
        let basis = ReducedBasis::new(modes, vec![1.0; width], 1e-7).unwrap();
        let online = OnlineSolver::new(&model, basis, &cfg()).unwrap();
        let sol = online.solve(&[10f64.powf(k), f, 0.3, 0.7]).unwrap();
        prop_assert!(sol.diagnostics.mass.relative <= 1e-13);
        // the correction is solenoidal, so the balance is that of step 1
        let before = model.complex().divergence(&sol.tpfa_flux);
        let after = model.complex().divergence(&sol.flux);
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0) * 8.0);
        }
    }

    #[test]
    fn pod_modes_stay_orthonormal(m in 5usize..60, n in 1usize..8, seed in 0u64..500) {
        let s = random_matrix(m, n, seed);
        let b = pod_truncate(&s, 1e-7).unwrap();
        prop_assert!(orthonormality_defect(b.modes()) <= 1e-12);
        prop_assert!(b.singular_values().windows(2).all(|w| w[0] >= w[1]));
    }
}
