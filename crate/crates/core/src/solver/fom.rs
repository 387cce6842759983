use super::{DiscreteComplex, Diagnostics, Physics, Solution};
use crate::error::{Error, Result};
use crate::linalg::{pcg_with, Cholesky, LinearSolverConfig, Lu, SolveStats};
use crate::sparse::{diagonal, from_triplets, matvec, matvec_t};

/// Route for the saddle-point reference solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FomMethod {
    /// Sparse LU of the full block system.
    Direct,
    /// CG on the cell Schur complement `B M⁻¹ Bᵀ` with an exact inner
    /// Cholesky solve of the flux mass.
    SchurCg(LinearSolverConfig),
}

/// Solves `[[M, −Bᵀ], [B, 0]] [q; π] = [−g; f]`.
///
/// Without a pressure boundary the first pressure unknown and the first
/// mass-balance row are dropped (the dropped row is implied by the others
/// for compatible data) and the pressure is shifted to zero mean.
pub fn solve_fom_system(complex: &DiscreteComplex, physics: &Physics, method: FomMethod) -> Result<Solution> {
    physics.check(complex)?;
    let (q, mut p, stats) = match method {
        FomMethod::Direct => direct(complex, physics)?,
        FomMethod::SchurCg(cfg) => schur_cg(complex, physics, &cfg)?,
    };
    if complex.pressure_gauge() {
        complex.remove_pressure_mean(&mut p);
    }
    Ok(Solution {
        diagnostics: Diagnostics { mass: complex.mass_residual(&q, &physics.source), step2: stats, ..Default::default() },
        flux: q,
        pressure: p,
        potential: Vec::new(),
        tpfa_flux: Vec::new(),
    })
}

fn direct(complex: &DiscreteComplex, physics: &Physics) -> Result<(Vec<f64>, Vec<f64>, SolveStats)> {
    let nq = complex.n_flux();
    let nc = complex.n_cells();
    let skip = usize::from(complex.pressure_gauge());
    let n = nq + nc - skip;
    let mut trip = Vec::with_capacity(physics.flux_mass.nnz() + 2 * complex.div().nnz());
    for (r, row) in physics.flux_mass.outer_iterator().enumerate() {
        for (c, &v) in row.iter() {
            trip.push((r, c, v));
        }
    }
    for (cell, row) in complex.div().outer_iterator().enumerate() {
        if cell < skip {
            continue;
        }
        let k = nq + cell - skip;
        for (face, &s) in row.iter() {
            let s = f64::from(s);
            trip.push((face, k, -s));
            trip.push((k, face, s));
        }
    }
    let a = from_triplets(n, n, trip);
    let mut rhs: Vec<f64> = physics.boundary_rhs.iter().map(|g| -g).collect();
    rhs.extend_from_slice(&physics.source[skip..]);
    let lu = Lu::factor(&a)?;
    let mut x = lu.solve(&rhs);
    // one refinement pass against the assembled system
    let ax = matvec(&a, &x);
    let res: Vec<f64> = rhs.iter().zip(&ax).map(|(b, y)| b - y).collect();
    let dx = lu.solve(&res);
    for (x, d) in x.iter_mut().zip(&dx) {
        *x += d;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("saddle-point factorization produced non-finite values".into()));
    }
    let q = x[..nq].to_vec();
    let mut p = vec![0.0; skip];
    p.extend_from_slice(&x[nq..]);
    Ok((q, p, SolveStats::default()))
}

fn schur_cg(
    complex: &DiscreteComplex,
    physics: &Physics,
    cfg: &LinearSolverConfig,
) -> Result<(Vec<f64>, Vec<f64>, SolveStats)> {
    let chol = Cholesky::factor(&physics.flux_mass)?;
    let div = complex.div_f64();
    let skip = usize::from(complex.pressure_gauge());
    let nc = complex.n_cells();
    let lift = |x: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; skip];
        full.extend_from_slice(x);
        full
    };
    // S π = B M⁻¹ Bᵀ π restricted to the kept pressure unknowns
    let apply = |x: &[f64]| -> Vec<f64> {
        let bt = matvec_t(div, &lift(x));
        let y = matvec(div, &chol.solve(&bt));
        y[skip..].to_vec()
    };
    let mg = chol.solve(&physics.boundary_rhs);
    let bmg = matvec(div, &mg);
    let rhs: Vec<f64> = (skip..nc).map(|c| physics.source[c] + bmg[c]).collect();
    // Jacobi preconditioner from the diagonal of the mass
    let dm = diagonal(&physics.flux_mass);
    let dinv: Vec<f64> = dm.iter().map(|d| 1.0 / d).collect();
    let mut pre = vec![0.0; nc];
    for (cell, row) in div.outer_iterator().enumerate() {
        pre[cell] = row.iter().map(|(f, &s)| s * s * dinv[f]).sum();
    }
    let out = pcg_with(apply, &pre[skip..], &rhs, cfg.rel_tol, cfg.max_iter);
    if !out.converged {
        return Err(Error::Solver(format!(
            "Schur complement CG stopped after {} iterations at relative residual {:.3e}",
            out.iterations, out.rel_residual
        )));
    }
    let p = lift(&out.x);
    let bt = matvec_t(div, &p);
    let w: Vec<f64> = bt.iter().zip(&physics.boundary_rhs).map(|(b, g)| b - g).collect();
    let q = chol.solve(&w);
    Ok((q, p, SolveStats { iterations: out.iterations, rel_residual: out.rel_residual }))
}
