//! Mass-conservative Darcy flow on simplicial meshes.
//!
//! Fluxes are computed in three steps on the lowest-order Whitney complex:
//! a two-point flux approximation gives a conservative flux, a correction in
//! the kernel of the divergence restores the mixed finite element solution,
//! and a final pressure reconstruction recovers the cell pressures. The
//! correction can be replaced by a reduced-basis surrogate without touching
//! the mass balance. [`mixdim`] extends the same procedure to 2D fracture
//! networks.

pub mod assembly;
pub mod complex;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod mixdim;
pub mod rbm;
pub mod solver;
pub mod sparse;

pub use assembly::{assemble_mass, lump, tpfa_lumping, ConductivityField, LumpFlavor, LumpedMass};
pub use complex::{build_differential, verify_exactness, EssentialRestriction, ExactnessReport, IncidenceMatrix};
pub use error::{Error, Result};
pub use linalg::{LinearSolverConfig, SolverMethod};
pub use mesh::{build_structured, tag_boundary, BoundaryTag, BoundaryTags, Point, Regime, SimplicialMesh};
pub use rbm::{pod_truncate, sample_latin_hypercube, ParamRange, ReducedBasis};
pub use solver::{
    solve_fom, solve_three_step, Backend, DiscreteComplex, Physics, ProblemSpec, Solution,
};
