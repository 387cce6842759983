//! Flow in a 2D domain with embedded fractures.
//!
//! The bulk is triangulated so that fractures run along edges
//! ([`conforming_mesh`]); [`MixedDimMesh`] then assembles the coupled
//! bulk/fracture/intersection complex, whose divergence of curl vanishes
//! exactly. The three-step solver and reduced bases of the single-domain
//! case apply unchanged through [`DiscreteComplex`](crate::solver::DiscreteComplex).

mod mesher;
mod model;
mod network;
mod physics;
mod topology;

pub use mesher::conforming_mesh;
pub use model::{FracturedModel, DEFAULT_APERTURE};
pub use network::{Fracture, FractureNetwork};
pub use physics::{harmonic_mean, EffectiveConductivity, InterfaceFlow};
pub use topology::{FluxDof, FractureCell, IntersectionPoint, MixedDimMesh, Tip};
