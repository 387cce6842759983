//! The three-step flux solver and the saddle-point reference solve.
//!
//! All solvers work on a [`DiscreteComplex`] (topology and geometry, fixed
//! for a mesh) together with [`Physics`] (conductivity-dependent matrices and
//! right-hand sides). Pressures are cell values, fluxes and sources are
//! integrals over faces and cells.

mod fom;
mod single;
mod steps;

pub use fom::{solve_fom_system, FomMethod};
pub use single::{solve_fom, solve_three_step, Lumping, ProblemSpec, ScalarField, SingleDomain};
pub use steps::{
    step1_conservative_flux, step2_correction, step2_operator, step2_rhs, step3_pressure, three_step, Backend,
    CellOperator,
};
pub(crate) use steps::{curl_of_modes, project_penalty, reduced_solve};

use std::time::Duration;

use sprs::CsMat;

use crate::assembly::LumpedMass;
use crate::complex::{composition_defect, IncidenceMatrix};
use crate::error::{Error, Result};
use crate::linalg::SolveStats;
use crate::sparse::{dot, energy, matvec, to_f64};

/// Conductivity-independent operators on the kept degrees of freedom.
#[derive(Debug, Clone)]
pub struct DiscreteComplex {
    dim: usize,
    div: IncidenceMatrix,
    curl: IncidenceMatrix,
    div_f: CsMat<f64>,
    curl_f: CsMat<f64>,
    penalty: Option<CsMat<f64>>,
    cell_measure: Vec<f64>,
    flux_norm: CsMat<f64>,
    pressure_gauge: bool,
    potential_gauge: bool,
}

impl DiscreteComplex {
    /// `div`: cells × fluxes, `curl`: fluxes × potentials. `penalty`
    /// regularizes the curl kernel in 3D. `pressure_gauge` marks a pressure
    /// defined up to a constant, `potential_gauge` a curl whose kernel is the
    /// constants.
    pub fn new(
        dim: usize,
        div: IncidenceMatrix,
        curl: IncidenceMatrix,
        penalty: Option<CsMat<f64>>,
        cell_measure: Vec<f64>,
        flux_norm: CsMat<f64>,
        pressure_gauge: bool,
        potential_gauge: bool,
    ) -> Result<Self> {
        if div.cols() != curl.rows() {
            return Err(Error::Operator(format!(
                "divergence has {} columns but the curl has {} rows",
                div.cols(),
                curl.rows()
            )));
        }
        if cell_measure.len() != div.rows() || flux_norm.rows() != div.cols() {
            return Err(Error::Operator("operator sizes disagree".into()));
        }
        if let Some(p) = &penalty {
            if p.rows() != curl.cols() {
                return Err(Error::Operator("penalty size disagrees with the potential space".into()));
            }
        }
        let defect = composition_defect(&div, &curl);
        if defect != 0 {
            return Err(Error::Operator(format!("divergence of curl is not zero (entry {defect})")));
        }
        let div_f = to_f64(&div);
        let curl_f = to_f64(&curl);
        Ok(Self {
            dim,
            div,
            curl,
            div_f,
            curl_f,
            penalty,
            cell_measure,
            flux_norm,
            pressure_gauge,
            potential_gauge,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.div.rows()
    }

    pub fn n_flux(&self) -> usize {
        self.div.cols()
    }

    pub fn n_potential(&self) -> usize {
        self.curl.cols()
    }

    pub fn div(&self) -> &IncidenceMatrix {
        &self.div
    }

    pub fn curl(&self) -> &IncidenceMatrix {
        &self.curl
    }

    pub(crate) fn div_f64(&self) -> &CsMat<f64> {
        &self.div_f
    }

    pub(crate) fn curl_f64(&self) -> &CsMat<f64> {
        &self.curl_f
    }

    pub fn penalty(&self) -> Option<&CsMat<f64>> {
        self.penalty.as_ref()
    }

    pub fn cell_measure(&self) -> &[f64] {
        &self.cell_measure
    }

    /// Unweighted flux mass used for error norms.
    pub fn flux_norm_matrix(&self) -> &CsMat<f64> {
        &self.flux_norm
    }

    pub fn pressure_gauge(&self) -> bool {
        self.pressure_gauge
    }

    pub fn potential_gauge(&self) -> bool {
        self.potential_gauge
    }

    /// `div q` evaluated with the integer incidence, so that adding a curl
    /// changes it only by rounding.
    pub fn divergence(&self, q: &[f64]) -> Vec<f64> {
        matvec(&self.div, q)
    }

    pub fn curl_of(&self, r: &[f64]) -> Vec<f64> {
        matvec(&self.curl, r)
    }

    pub fn mass_residual(&self, q: &[f64], f: &[f64]) -> MassResidual {
        let d = self.divergence(q);
        let max_abs = d.iter().zip(f).map(|(d, f)| (d - f).abs()).fold(0.0, f64::max);
        let scale = 1f64.max(inf_norm(f)).max(inf_norm(q));
        MassResidual { max_abs, relative: max_abs / scale }
    }

    pub fn flux_l2(&self, q: &[f64]) -> f64 {
        energy(&self.flux_norm, q).max(0.0).sqrt()
    }

    /// L² norm of cell pressure values.
    pub fn pressure_l2(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.cell_measure).map(|(p, m)| p * p * m).sum::<f64>().sqrt()
    }

    /// Shifts cell values to zero mean.
    pub fn remove_pressure_mean(&self, p: &mut [f64]) {
        let total: f64 = self.cell_measure.iter().sum();
        let mean = dot(p, &self.cell_measure) / total;
        for v in p.iter_mut() {
            *v -= mean;
        }
    }
}

/// Conductivity- and data-dependent parts of one problem instance.
#[derive(Debug, Clone)]
pub struct Physics {
    /// Flux mass weighted by the inverse conductivity.
    pub flux_mass: CsMat<f64>,
    /// Diagonal used by the cell system of steps 1 and 3.
    pub lumped: LumpedMass,
    /// Pressure boundary data tested against each flux basis function.
    pub boundary_rhs: Vec<f64>,
    /// Source integrated over each cell.
    pub source: Vec<f64>,
}

impl Physics {
    pub fn check(&self, complex: &DiscreteComplex) -> Result<()> {
        let nq = complex.n_flux();
        if self.flux_mass.rows() != nq || self.lumped.len() != nq || self.boundary_rhs.len() != nq {
            return Err(Error::Incompatible("flux data size disagrees with the complex".into()));
        }
        if self.source.len() != complex.n_cells() {
            return Err(Error::Incompatible("source size disagrees with the cell count".into()));
        }
        if complex.pressure_gauge() {
            let total: f64 = self.source.iter().sum();
            let scale: f64 = self.source.iter().map(|f| f.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
            if total.abs() > 1e-10 * scale {
                return Err(Error::Incompatible(format!(
                    "sources integrate to {total:.3e} but no pressure boundary is present"
                )));
            }
        }
        Ok(())
    }
}

/// Largest cell imbalance `|div q − f|`, absolute and relative to
/// `max(1, ‖f‖∞, ‖q‖∞)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MassResidual {
    pub max_abs: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepTimings {
    pub step1: Duration,
    pub step2: Duration,
    pub step3: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub mass: MassResidual,
    /// Residual of the two-point flux before the correction.
    pub mass_tpfa: Option<MassResidual>,
    pub step2: SolveStats,
    pub timings: StepTimings,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Solution {
    pub flux: Vec<f64>,
    /// Cell pressure values.
    pub pressure: Vec<f64>,
    /// Correction potential; empty for the reference solve.
    pub potential: Vec<f64>,
    /// Two-point flux of step 1; empty for the reference solve.
    pub tpfa_flux: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Relative L² errors `(pressure, flux)` of `approx` against `reference`.
pub fn relative_errors(complex: &DiscreteComplex, approx: &Solution, reference: &Solution) -> (f64, f64) {
    let dp: Vec<f64> = approx.pressure.iter().zip(&reference.pressure).map(|(a, b)| a - b).collect();
    let dq: Vec<f64> = approx.flux.iter().zip(&reference.flux).map(|(a, b)| a - b).collect();
    let np = complex.pressure_l2(&reference.pressure);
    let nq = complex.flux_l2(&reference.flux);
    let ep = complex.pressure_l2(&dp) / if np > 0.0 { np } else { 1.0 };
    let eq = complex.flux_l2(&dq) / if nq > 0.0 { nq } else { 1.0 };
    (ep, eq)
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
