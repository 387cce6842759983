use std::sync::Arc;

use sprs::CsMat;

use super::{
    three_step, Backend, CellOperator, DiscreteComplex, FomMethod, Physics, Solution,
};
use crate::assembly::{assemble_mass, lump, tpfa_lumping, ConductivityField, LumpFlavor, LumpedMass};
use crate::complex::{build_differential, restrict, EssentialRestriction};
use crate::error::{Error, Result};
use crate::linalg::LinearSolverConfig;
use crate::mesh::{BoundaryTag, BoundaryTags, Point, SimplicialMesh};
use crate::sparse::weighted_gram;

/// Scalar function of position, shared across threads.
pub type ScalarField = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Diagonal used in steps 1 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lumping {
    /// Two-point lumping with the actual conductivity.
    #[default]
    Tpfa,
    /// Two-point lumping of the unit conductivity. The cell operator is then
    /// independent of `K` and can be factorized once for many queries.
    TpfaReference,
    /// Row sums of the weighted flux mass.
    RowSum,
    Identity,
}

/// A single-domain problem on a simplicial mesh.
#[derive(Debug)]
pub struct SingleDomain {
    mesh: Arc<SimplicialMesh>,
    tags: BoundaryTags,
    restriction: EssentialRestriction,
    complex: DiscreteComplex,
    reference_lumping: LumpedMass,
}

impl SingleDomain {
    pub fn new(mesh: Arc<SimplicialMesh>, tags: BoundaryTags) -> Result<Self> {
        if tags.n_faces() != mesh.n_faces() {
            return Err(Error::Boundary("boundary tags were built for a different mesh".into()));
        }
        let dim = mesh.dim();
        let restriction = EssentialRestriction::new(&mesh, &tags);
        let div = restriction.restrict_differential(&build_differential(&mesh, dim - 1)?, dim - 1);
        let curl = restriction.restrict_differential(&build_differential(&mesh, dim - 2)?, dim - 2);
        let penalty = if dim == 3 { Some(edge_penalty(&mesh, &restriction)?) } else { None };
        let flux_norm = restriction.restrict_square(&assemble_mass(&mesh, dim - 1, None)?, dim - 1);
        let has_pressure = !tags.faces_with(BoundaryTag::Pressure).is_empty();
        let has_flux = !tags.faces_with(BoundaryTag::Flux).is_empty();
        let complex = DiscreteComplex::new(
            dim,
            div,
            curl,
            penalty,
            mesh.measures(dim).to_vec(),
            flux_norm,
            !has_pressure,
            dim == 2 && !has_flux,
        )?;
        let reference_lumping =
            tpfa_lumping(&mesh, &ConductivityField::uniform(mesh.n_cells(), 1.0))?.restricted(restriction.kept(dim - 1));
        Ok(Self { mesh, tags, restriction, complex, reference_lumping })
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn tags(&self) -> &BoundaryTags {
        &self.tags
    }

    pub fn restriction(&self) -> &EssentialRestriction {
        &self.restriction
    }

    pub fn complex(&self) -> &DiscreteComplex {
        &self.complex
    }

    /// Two-point lumping of the unit conductivity on kept faces.
    pub fn reference_lumping(&self) -> &LumpedMass {
        &self.reference_lumping
    }

    /// Flux mass, lumping and right-hand sides for one instance.
    pub fn physics(
        &self,
        k: &ConductivityField,
        source: &dyn Fn(&Point) -> f64,
        pressure: &dyn Fn(&Point) -> f64,
        lumping: Lumping,
    ) -> Result<Physics> {
        let mesh = &self.mesh;
        let dim = mesh.dim();
        let flux_mass = self.restriction.restrict_square(&assemble_mass(mesh, dim - 1, Some(k))?, dim - 1);
        let lumped = match lumping {
            Lumping::Tpfa => tpfa_lumping(mesh, k)?.restricted(self.restriction.kept(dim - 1)),
            Lumping::TpfaReference => self.reference_lumping.clone(),
            Lumping::RowSum => lump(&flux_mass, LumpFlavor::RowSum)?,
            Lumping::Identity => lump(&flux_mass, LumpFlavor::Identity)?,
        };
        Ok(Physics {
            flux_mass,
            lumped,
            boundary_rhs: self.boundary_rhs(pressure),
            source: self.source(source),
        })
    }

    /// Cell integrals of `f`, by the centroid rule.
    pub fn source(&self, f: &dyn Fn(&Point) -> f64) -> Vec<f64> {
        let dim = self.mesh.dim();
        (0..self.mesh.n_cells()).map(|c| f(&self.mesh.centroid(dim, c)) * self.mesh.cell_volume(c)).collect()
    }

    /// Pressure data at the centroid of each pressure face, signed by the
    /// face orientation relative to the outward normal.
    pub fn boundary_rhs(&self, g: &dyn Fn(&Point) -> f64) -> Vec<f64> {
        let mesh = &self.mesh;
        let dim = mesh.dim();
        let mut full = vec![0.0; mesh.n_faces()];
        for f in self.tags.faces_with(BoundaryTag::Pressure) {
            let (c, _) = mesh.face_cells(f);
            let j = mesh.local_face(c, f).expect("face of its cell");
            let s = f64::from(mesh.cell_face_signs(c)[j]);
            full[f] = s * g(&mesh.centroid(dim - 1, f));
        }
        self.restriction.restrict_vec(dim - 1, &full)
    }

    /// Full-length flux vector with eliminated faces set to zero.
    pub fn prolong_flux(&self, q: &[f64]) -> Vec<f64> {
        self.restriction.prolong(self.mesh.dim() - 1, q)
    }
}

/// Regularization `B̂₀ L₀⁻¹ B̂₀ᵀ` of the edge potential, with `B̂₀ = M₁B₀` and
/// `L₀` the row-sum lumped nodal mass, all on kept entities.
fn edge_penalty(mesh: &SimplicialMesh, restriction: &EssentialRestriction) -> Result<CsMat<f64>> {
    let grad = crate::sparse::to_f64(&build_differential(mesh, 0)?);
    let grad = restrict(&grad, restriction.kept(1), restriction.kept(0));
    let m1 = restriction.restrict_square(&assemble_mass(mesh, 1, None)?, 1);
    let m0 = restriction.restrict_square(&assemble_mass(mesh, 0, None)?, 0);
    let l0 = lump(&m0, LumpFlavor::RowSum)?;
    let weak = (&m1 * &grad).to_csr();
    Ok(weighted_gram(&weak, &l0.inverse()))
}

/// Everything needed to pose one single-domain Darcy problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub mesh: Arc<SimplicialMesh>,
    pub tags: BoundaryTags,
    pub conductivity: ConductivityField,
    pub source: ScalarField,
    /// Pressure on faces tagged [`BoundaryTag::Pressure`].
    pub pressure: ScalarField,
    pub lumping: Lumping,
}

impl ProblemSpec {
    /// Zero source and zero boundary pressure.
    pub fn new(mesh: Arc<SimplicialMesh>, tags: BoundaryTags, conductivity: ConductivityField) -> Self {
        Self {
            mesh,
            tags,
            conductivity,
            source: Arc::new(|_| 0.0),
            pressure: Arc::new(|_| 0.0),
            lumping: Lumping::default(),
        }
    }

    pub fn with_source(mut self, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Arc::new(f);
        self
    }

    pub fn with_pressure(mut self, g: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.pressure = Arc::new(g);
        self
    }

    pub fn with_lumping(mut self, lumping: Lumping) -> Self {
        self.lumping = lumping;
        self
    }

    /// Linear boundary pressure `g(x) = a·x`.
    pub fn with_linear_pressure(self, a: [f64; 3]) -> Self {
        self.with_pressure(move |x| a[0] * x[0] + a[1] * x[1] + a[2] * x[2])
    }

    pub fn domain(&self) -> Result<SingleDomain> {
        SingleDomain::new(self.mesh.clone(), self.tags.clone())
    }

    pub fn physics(&self, domain: &SingleDomain) -> Result<Physics> {
        domain.physics(&self.conductivity, self.source.as_ref(), self.pressure.as_ref(), self.lumping)
    }
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dim", &self.mesh.dim())
            .field("cells", &self.mesh.n_cells())
            .field("regime", &self.tags.regime())
            .field("lumping", &self.lumping)
            .finish()
    }
}

/// Three-step solve of `spec`; `cfg` drives the cell system.
pub fn solve_three_step(spec: &ProblemSpec, backend: Backend<'_>, cfg: &LinearSolverConfig) -> Result<Solution> {
    let domain = spec.domain()?;
    let physics = spec.physics(&domain)?;
    physics.check(domain.complex())?;
    let cell = CellOperator::new(domain.complex(), &physics.lumped, cfg)?;
    three_step(domain.complex(), &physics, &cell, backend)
}

/// Saddle-point reference solve of `spec`.
pub fn solve_fom(spec: &ProblemSpec, method: FomMethod) -> Result<Solution> {
    let domain = spec.domain()?;
    let physics = spec.physics(&domain)?;
    super::solve_fom_system(domain.complex(), &physics, method)
}
