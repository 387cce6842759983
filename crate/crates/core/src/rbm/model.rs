use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{Artifact, ParamRange, ReducedBasis};
use crate::assembly::{ConductivityField, LumpedMass};
use crate::error::{Error, Result};
use crate::linalg::LinearSolverConfig;
use crate::mesh::{build_structured, BoundaryTag, BoundaryTags, SimplicialMesh};
use crate::solver::{
    curl_of_modes, project_penalty, reduced_solve, solve_fom_system, step1_conservative_flux, step2_correction,
    step2_rhs, step3_pressure, three_step, Backend, CellOperator, Diagnostics, DiscreteComplex, FomMethod,
    Lumping, Physics, SingleDomain, Solution, StepTimings,
};

/// A family of problems on one fixed complex, indexed by a parameter vector.
pub trait ParametricModel: Sync {
    fn complex(&self) -> &DiscreteComplex;

    fn ranges(&self) -> &[ParamRange];

    fn physics(&self, mu: &[f64]) -> Result<Physics>;

    /// Identifies mesh, geometry and lumping; artifacts built for one model
    /// are refused by another.
    fn fingerprint(&self) -> [u8; 32];

    /// A lumping used for every parameter, which lets the cell system be
    /// factorized once.
    fn shared_lumping(&self) -> Option<&LumpedMass> {
        None
    }

    fn check_parameters(&self, mu: &[f64]) -> Result<()> {
        let ranges = self.ranges();
        if mu.len() != ranges.len() {
            return Err(Error::Incompatible(format!("expected {} parameters, got {}", ranges.len(), mu.len())));
        }
        Ok(())
    }

    /// Saddle-point reference solution.
    fn solve_fom(&self, mu: &[f64]) -> Result<Solution> {
        solve_fom_system(self.complex(), &self.physics(mu)?, FomMethod::Direct)
    }

    /// Three-step solution with the given correction backend.
    fn solve_three_step(&self, mu: &[f64], backend: Backend<'_>, cfg: &LinearSolverConfig) -> Result<Solution> {
        let physics = self.physics(mu)?;
        let cell = CellOperator::new(self.complex(), &physics.lumped, cfg)?;
        three_step(self.complex(), &physics, &cell, backend)
    }
}

/// Snapshot matrix with one correction potential per column.
#[derive(Debug, Clone)]
pub struct Snapshots {
    pub matrix: DMatrix<f64>,
    pub samples: Vec<Vec<f64>>,
}

/// Full correction solves at every sample, spread over `workers` threads.
pub fn collect_snapshots<M: ParametricModel + ?Sized>(
    model: &M,
    samples: &[Vec<f64>],
    cfg: &LinearSolverConfig,
    workers: usize,
) -> Result<Snapshots> {
    if samples.is_empty() {
        return Err(Error::Incompatible("no snapshot samples".into()));
    }
    let complex = model.complex();
    let shared = match model.shared_lumping() {
        Some(l) => Some(CellOperator::new(complex, l, cfg)?),
        None => None,
    };
    let solve_one = |(i, mu): (usize, &Vec<f64>)| -> Result<Vec<f64>> {
        let run = || -> Result<Vec<f64>> {
            model.check_parameters(mu)?;
            let physics = model.physics(mu)?;
            physics.check(complex)?;
            let own;
            let cell = match &shared {
                Some(c) => c,
                None => {
                    own = CellOperator::new(complex, &physics.lumped, cfg)?;
                    &own
                }
            };
            let (q_f, _) = step1_conservative_flux(complex, &physics, cell)?;
            Ok(step2_correction(complex, &physics, &q_f, Backend::Full(*cfg))?.0)
        };
        run().map_err(|e| Error::Solver(format!("snapshot {i} at {mu:?}: {e}")))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Solver(format!("worker pool: {e}")))?;
    let columns: Vec<Vec<f64>> =
        pool.install(|| samples.par_iter().enumerate().map(solve_one).collect::<Result<Vec<_>>>())?;
    let n_r = complex.n_potential();
    let mut matrix = DMatrix::zeros(n_r, columns.len());
    for (j, c) in columns.iter().enumerate() {
        matrix.column_mut(j).copy_from_slice(c);
    }
    Ok(Snapshots { matrix, samples: samples.to_vec() })
}

/// Online stage: per query, assemble the weighted mass, run steps 1 and 3
/// on the (possibly shared) cell system and solve the correction in the
/// span of the basis.
pub struct OnlineSolver<'m, M: ParametricModel + ?Sized> {
    model: &'m M,
    basis: ReducedBasis,
    curl_modes: DMatrix<f64>,
    penalty_modes: Option<DMatrix<f64>>,
    shared: Option<CellOperator>,
    cfg: LinearSolverConfig,
}

impl<'m, M: ParametricModel + ?Sized> OnlineSolver<'m, M> {
    pub fn new(model: &'m M, basis: ReducedBasis, cfg: &LinearSolverConfig) -> Result<Self> {
        let complex = model.complex();
        if basis.n_full() != complex.n_potential() {
            return Err(Error::ArtifactMismatch(format!(
                "basis has {} rows but the model has {} potential dofs",
                basis.n_full(),
                complex.n_potential()
            )));
        }
        let curl_modes = curl_of_modes(complex, basis.modes());
        let penalty_modes = complex.penalty().map(|p| project_penalty(p, basis.modes()));
        let shared = match model.shared_lumping() {
            Some(l) => Some(CellOperator::new(complex, l, cfg)?),
            None => None,
        };
        Ok(Self { model, basis, curl_modes, penalty_modes, shared, cfg: *cfg })
    }

    /// Checks the model fingerprint before accepting the basis.
    pub fn from_artifact(model: &'m M, artifact: Artifact, cfg: &LinearSolverConfig) -> Result<Self> {
        if artifact.meta.fingerprint != model.fingerprint() {
            return Err(Error::ArtifactMismatch("artifact was built for a different mesh or model".into()));
        }
        Self::new(model, artifact.basis, cfg)
    }

    pub fn basis(&self) -> &ReducedBasis {
        &self.basis
    }

    pub fn solve(&self, mu: &[f64]) -> Result<Solution> {
        self.model.check_parameters(mu)?;
        let complex = self.model.complex();
        let t0 = Instant::now();
        let physics = self.model.physics(mu)?;
        physics.check(complex)?;
        let own;
        let cell = match &self.shared {
            Some(c) => c,
            None => {
                own = CellOperator::new(complex, &physics.lumped, &self.cfg)?;
                &own
            }
        };
        let (q_f, _) = step1_conservative_flux(complex, &physics, cell)?;
        let t1 = Instant::now();
        let b = step2_rhs(complex, &physics, &q_f);
        let r = reduced_solve(
            &physics.flux_mass,
            &self.curl_modes,
            self.penalty_modes.as_ref(),
            self.basis.modes(),
            &b,
        )?;
        let cr = complex.curl_of(&r);
        let q: Vec<f64> = q_f.iter().zip(&cr).map(|(a, b)| a + b).collect();
        let t2 = Instant::now();
        let p = step3_pressure(complex, &physics, cell, &q)?;
        let t3 = Instant::now();
        Ok(Solution {
            diagnostics: Diagnostics {
                mass: complex.mass_residual(&q, &physics.source),
                mass_tpfa: Some(complex.mass_residual(&q_f, &physics.source)),
                timings: StepTimings { step1: t1 - t0, step2: t2 - t1, step3: t3 - t2 },
                ..Default::default()
            },
            flux: q,
            pressure: p,
            potential: r,
            tpfa_flux: q_f,
        })
    }
}

/// Unit square or cube in four equal slabs along the last axis. The second
/// and fourth slab have conductivity `K̄`, the others one; the source is the
/// constant `f̄` and the boundary pressure `ᾱ·x` on the whole boundary.
///
/// Parameters: `[K̄, f̄, ᾱ_1, .., ᾱ_n]`.
#[derive(Debug)]
pub struct LayeredModel {
    domain: SingleDomain,
    ranges: Vec<ParamRange>,
    in_layer: Vec<bool>,
    lumping: Lumping,
}

pub const LAYERS: usize = 4;

impl LayeredModel {
    pub fn new(dim: usize, divisions: usize) -> Result<Self> {
        let mesh = Arc::new(build_structured(dim, divisions, [0.0; 3], [1.0; 3])?);
        Self::on_mesh(mesh)
    }

    /// Pressure data on the whole boundary.
    pub fn on_mesh(mesh: Arc<SimplicialMesh>) -> Result<Self> {
        let tags = BoundaryTags::uniform(&mesh, BoundaryTag::Pressure);
        Self::with_tags(mesh, tags)
    }

    pub fn with_tags(mesh: Arc<SimplicialMesh>, tags: BoundaryTags) -> Result<Self> {
        let dim = mesh.dim();
        let in_layer = (0..mesh.n_cells())
            .map(|c| {
                let z = mesh.centroid(dim, c)[dim - 1];
                let layer = ((z * LAYERS as f64).floor() as usize).min(LAYERS - 1);
                layer % 2 == 1
            })
            .collect();
        let mut ranges = vec![ParamRange::log("K", 1e-5, 1e5), ParamRange::uniform("f", -1.0, 1.0)];
        for axis in &["alpha_x", "alpha_y", "alpha_z"][..dim] {
            ranges.push(ParamRange::uniform(axis, 0.0, 1.0));
        }
        let domain = SingleDomain::new(mesh, tags)?;
        Ok(Self { domain, ranges, in_layer, lumping: Lumping::TpfaReference })
    }

    pub fn with_lumping(mut self, lumping: Lumping) -> Self {
        self.lumping = lumping;
        self
    }

    pub fn domain(&self) -> &SingleDomain {
        &self.domain
    }

    pub fn conductivity(&self, k_bar: f64) -> ConductivityField {
        ConductivityField::Scalar(self.in_layer.iter().map(|&l| if l { k_bar } else { 1.0 }).collect())
    }
}

impl ParametricModel for LayeredModel {
    fn complex(&self) -> &DiscreteComplex {
        self.domain.complex()
    }

    fn ranges(&self) -> &[ParamRange] {
        &self.ranges
    }

    fn physics(&self, mu: &[f64]) -> Result<Physics> {
        self.check_parameters(mu)?;
        let k = self.conductivity(mu[0]);
        let f_bar = mu[1];
        let mut alpha = [0.0; 3];
        alpha[..mu.len() - 2].copy_from_slice(&mu[2..]);
        let g = move |x: &crate::mesh::Point| alpha[0] * x[0] + alpha[1] * x[1] + alpha[2] * x[2];
        self.domain.physics(&k, &|_| f_bar, &g, self.lumping)
    }

    fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"layered");
        h.update(self.domain.mesh().fingerprint());
        for f in self.domain.mesh().boundary_faces() {
            h.update(self.domain.tags().tag(f).map_or("-", |t| t.name()).as_bytes());
        }
        h.update(format!("{:?}", self.lumping).as_bytes());
        h.finalize().into()
    }

    fn shared_lumping(&self) -> Option<&LumpedMass> {
        (self.lumping == Lumping::TpfaReference).then(|| self.domain.reference_lumping())
    }
}
