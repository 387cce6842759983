use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use sprs::CsMat;

use super::{DiscreteComplex, Diagnostics, Physics, Solution, StepTimings};
use crate::assembly::LumpedMass;
use crate::error::{Error, Result};
use crate::linalg::{LinearSolverConfig, SolveStats, SpdSolver};
use crate::rbm::ReducedBasis;
use crate::sparse::{add, congruence, matvec, matvec_t, weighted_gram};

/// How the correction potential is computed.
#[derive(Clone, Copy)]
pub enum Backend<'a> {
    Full(LinearSolverConfig),
    Reduced(&'a ReducedBasis),
}

impl std::fmt::Debug for Backend<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Full(cfg) => write!(f, "Full({:?})", cfg.method),
            Backend::Reduced(b) => write!(f, "Reduced({} modes)", b.n_modes()),
        }
    }
}

const REFINEMENT_PASSES: usize = 3;

/// Factorized cell system `B L⁻¹ Bᵀ` shared by steps 1 and 3.
pub struct CellOperator {
    solver: SpdSolver,
    lumped_inv: Vec<f64>,
    pressure_gauge: bool,
}

impl CellOperator {
    pub fn new(complex: &DiscreteComplex, lumped: &LumpedMass, cfg: &LinearSolverConfig) -> Result<Self> {
        if lumped.len() != complex.n_flux() {
            return Err(Error::Operator("lumped mass size disagrees with the flux space".into()));
        }
        let lumped_inv = lumped.inverse();
        let a = weighted_gram(complex.div_f64(), &lumped_inv);
        let solver = SpdSolver::new(&a, cfg, complex.pressure_gauge())?;
        Ok(Self { solver, lumped_inv, pressure_gauge: complex.pressure_gauge() })
    }

    pub fn lumped_inverse(&self) -> &[f64] {
        &self.lumped_inv
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solver.solve(b)?.0)
    }

    /// `L⁻¹ (Bᵀ π − g)`.
    fn flux_from(&self, complex: &DiscreteComplex, pi: &[f64], g: &[f64]) -> Vec<f64> {
        let bt = matvec_t(complex.div_f64(), pi);
        bt.iter().zip(g).zip(&self.lumped_inv).map(|((b, g), l)| (b - g) * l).collect()
    }
}

/// Step 1: a flux with `div q_f = f` from the lumped cell system.
///
/// Returns `(q_f, π_f)`; `π_f` is the two-point pressure. A few passes of
/// iterative refinement drive the cell imbalance to rounding level even
/// when transmissibilities span many orders of magnitude.
pub fn step1_conservative_flux(
    complex: &DiscreteComplex,
    physics: &Physics,
    cell: &CellOperator,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = &physics.boundary_rhs;
    let f = &physics.source;
    let lg: Vec<f64> = g.iter().zip(&cell.lumped_inv).map(|(g, l)| g * l).collect();
    let blg = matvec(complex.div_f64(), &lg);
    let rhs: Vec<f64> = f.iter().zip(&blg).map(|(f, b)| f + b).collect();
    let mut pi = cell.solve(&rhs)?;
    let mut q = cell.flux_from(complex, &pi, g);
    let zeros = vec![0.0; q.len()];
    for _ in 0..REFINEMENT_PASSES {
        let div = complex.divergence(&q);
        let rho: Vec<f64> = f.iter().zip(&div).map(|(f, d)| f - d).collect();
        if rho.iter().all(|&r| r == 0.0) {
            break;
        }
        let delta = cell.solve(&rho)?;
        let dq = cell.flux_from(complex, &delta, &zeros);
        for (q, d) in q.iter_mut().zip(&dq) {
            *q += d;
        }
        for (p, d) in pi.iter_mut().zip(&delta) {
            *p += d;
        }
    }
    if cell.pressure_gauge {
        complex.remove_pressure_mean(&mut pi);
    }
    Ok((q, pi))
}

/// Full step-2 operator `Cᵀ M^K C + penalty`.
pub fn step2_operator(complex: &DiscreteComplex, flux_mass: &CsMat<f64>) -> CsMat<f64> {
    let a = congruence(complex.curl_f64(), flux_mass);
    match complex.penalty() {
        Some(p) => add(&a, p),
        None => a,
    }
}

/// Right-hand side `−Cᵀ (M^K q_f + g)` of step 2.
pub fn step2_rhs(complex: &DiscreteComplex, physics: &Physics, q_f: &[f64]) -> Vec<f64> {
    let mq = matvec(&physics.flux_mass, q_f);
    let w: Vec<f64> = mq.iter().zip(&physics.boundary_rhs).map(|(m, g)| -(m + g)).collect();
    matvec_t(complex.curl_f64(), &w)
}

/// Step 2: the potential whose curl corrects `q_f` towards the mixed flux.
pub fn step2_correction(
    complex: &DiscreteComplex,
    physics: &Physics,
    q_f: &[f64],
    backend: Backend<'_>,
) -> Result<(Vec<f64>, SolveStats)> {
    let b = step2_rhs(complex, physics, q_f);
    match backend {
        Backend::Full(cfg) => {
            let a = step2_operator(complex, &physics.flux_mass);
            let solver = SpdSolver::new(&a, &cfg, complex.potential_gauge())?;
            let (mut r, stats) = solver.solve(&b)?;
            if complex.potential_gauge() {
                remove_mean(&mut r);
            }
            Ok((r, stats))
        }
        Backend::Reduced(basis) => {
            if basis.n_full() != complex.n_potential() {
                return Err(Error::Basis(format!(
                    "basis has {} rows but the potential space has {} dofs",
                    basis.n_full(),
                    complex.n_potential()
                )));
            }
            let curl_modes = curl_of_modes(complex, basis.modes());
            let penalty_modes = match complex.penalty() {
                Some(p) => Some(project_penalty(p, basis.modes())),
                None => None,
            };
            let r = reduced_solve(&physics.flux_mass, &curl_modes, penalty_modes.as_ref(), basis.modes(), &b)?;
            Ok((r, SolveStats::default()))
        }
    }
}

/// Columns `C u_j` for each mode.
pub(crate) fn curl_of_modes(complex: &DiscreteComplex, modes: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(complex.n_flux(), modes.ncols());
    for j in 0..modes.ncols() {
        let col: Vec<f64> = modes.column(j).iter().copied().collect();
        let c = matvec(complex.curl_f64(), &col);
        out.column_mut(j).copy_from_slice(&c);
    }
    out
}

/// `Uᵀ P U`.
pub(crate) fn project_penalty(p: &CsMat<f64>, modes: &DMatrix<f64>) -> DMatrix<f64> {
    let mut pu = DMatrix::zeros(modes.nrows(), modes.ncols());
    for j in 0..modes.ncols() {
        let col: Vec<f64> = modes.column(j).iter().copied().collect();
        pu.column_mut(j).copy_from_slice(&matvec(p, &col));
    }
    modes.transpose() * pu
}

/// Galerkin solve of step 2 in the span of `modes`; `rhs` is the full-space
/// right-hand side.
pub(crate) fn reduced_solve(
    flux_mass: &CsMat<f64>,
    curl_modes: &DMatrix<f64>,
    penalty_modes: Option<&DMatrix<f64>>,
    modes: &DMatrix<f64>,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let m = modes.ncols();
    if m == 0 {
        return Ok(vec![0.0; modes.nrows()]);
    }
    let mut mw = DMatrix::zeros(curl_modes.nrows(), m);
    for j in 0..m {
        let col: Vec<f64> = curl_modes.column(j).iter().copied().collect();
        mw.column_mut(j).copy_from_slice(&matvec(flux_mass, &col));
    }
    let mut a = curl_modes.transpose() * &mw;
    if let Some(p) = penalty_modes {
        a += p;
    }
    // symmetrize away rounding before the dense factorization
    let a = (&a + a.transpose()) * 0.5;
    let b = modes.transpose() * DVector::from_column_slice(rhs);
    let coef = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::Basis(format!("reduced system is singular: {e}")))?,
    };
    Ok((modes * coef).iter().copied().collect())
}

/// Step 3: cell pressures from a conservative flux.
pub fn step3_pressure(complex: &DiscreteComplex, physics: &Physics, cell: &CellOperator, q: &[f64]) -> Result<Vec<f64>> {
    let mq = matvec(&physics.flux_mass, q);
    let w: Vec<f64> = mq
        .iter()
        .zip(&physics.boundary_rhs)
        .zip(&cell.lumped_inv)
        .map(|((m, g), l)| (m + g) * l)
        .collect();
    let rhs = matvec(complex.div_f64(), &w);
    let mut pi = cell.solve(&rhs)?;
    if cell.pressure_gauge {
        complex.remove_pressure_mean(&mut pi);
    }
    Ok(pi)
}

/// Runs steps 1 to 3.
pub fn three_step(
    complex: &DiscreteComplex,
    physics: &Physics,
    cell: &CellOperator,
    backend: Backend<'_>,
) -> Result<Solution> {
    physics.check(complex)?;
    let t0 = Instant::now();
    let (q_f, _) = step1_conservative_flux(complex, physics, cell)?;
    let t1 = Instant::now();
    let (r, stats) = step2_correction(complex, physics, &q_f, backend)?;
    let cr = complex.curl_of(&r);
    let q: Vec<f64> = q_f.iter().zip(&cr).map(|(a, b)| a + b).collect();
    let t2 = Instant::now();
    let p = step3_pressure(complex, physics, cell, &q)?;
    let t3 = Instant::now();
    Ok(Solution {
        diagnostics: Diagnostics {
            mass: complex.mass_residual(&q, &physics.source),
            mass_tpfa: Some(complex.mass_residual(&q_f, &physics.source)),
            step2: stats,
            timings: StepTimings { step1: t1 - t0, step2: t2 - t1, step3: t3 - t2 },
        },
        flux: q,
        pressure: p,
        potential: r,
        tpfa_flux: q_f,
    })
}

fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

