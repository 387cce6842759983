use sha2::{Digest, Sha256};

use super::mesher::conforming_mesh;
use super::network::FractureNetwork;
use super::physics::EffectiveConductivity;
use super::topology::MixedDimMesh;
use crate::assembly::ConductivityField;
use crate::error::Result;
use crate::mesh::Point;
use crate::rbm::{ParamRange, ParametricModel};
use crate::solver::{DiscreteComplex, Lumping, Physics};

/// Fractured unit square with bulk conductivity one and no source. Fractures
/// tagged `blocking` take the first parameter as conductivity, all others
/// the second; the outer boundary carries the pressure `ᾱ·x`.
///
/// Parameters: `[K⁻, K⁺, ᾱ_x, ᾱ_y]`.
#[derive(Debug)]
pub struct FracturedModel {
    mesh: MixedDimMesh,
    complex: DiscreteComplex,
    aperture: f64,
    ranges: Vec<ParamRange>,
    blocking: Vec<bool>,
    lumping: Lumping,
}

pub const DEFAULT_APERTURE: f64 = 1e-4;

impl FracturedModel {
    pub fn new(mesh: MixedDimMesh, aperture: f64) -> Result<Self> {
        // validates the aperture
        EffectiveConductivity::new(aperture, ConductivityField::uniform(1, 1.0), Vec::new())?;
        let complex = mesh.complex(aperture)?;
        let blocking = mesh.network().fractures.iter().map(|f| f.tag == "blocking").collect();
        let ranges = vec![
            ParamRange::log("K_blocking", 1e-5, 1e-3),
            ParamRange::log("K_conductive", 1e3, 1e5),
            ParamRange::uniform("alpha_x", 0.0, 1.0),
            ParamRange::uniform("alpha_y", 0.0, 1.0),
        ];
        Ok(Self { mesh, complex, aperture, ranges, blocking, lumping: Lumping::Tpfa })
    }

    /// Conforming triangulation of the unit square with triangles of area at
    /// most `max_area`.
    pub fn mesh_network(network: FractureNetwork, max_area: f64, aperture: f64) -> Result<Self> {
        let bulk = conforming_mesh(&network, [0.0, 0.0], [1.0, 1.0], max_area)?;
        Self::new(MixedDimMesh::new(bulk, network)?, aperture)
    }

    /// The ten-fracture network with two blocking fractures.
    pub fn benchmark(max_area: f64) -> Result<Self> {
        Self::mesh_network(FractureNetwork::benchmark(1e-4, 1e4), max_area, DEFAULT_APERTURE)
    }

    pub fn with_lumping(mut self, lumping: Lumping) -> Self {
        self.lumping = lumping;
        self
    }

    pub fn mesh(&self) -> &MixedDimMesh {
        &self.mesh
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn is_blocking(&self, fracture: usize) -> bool {
        self.blocking[fracture]
    }

    pub fn conductivity(&self, k_blocking: f64, k_conductive: f64) -> Result<EffectiveConductivity> {
        let fracture = self.blocking.iter().map(|&b| if b { k_blocking } else { k_conductive }).collect();
        EffectiveConductivity::new(self.aperture, ConductivityField::uniform(self.mesh.n_triangles(), 1.0), fracture)
    }
}

impl ParametricModel for FracturedModel {
    fn complex(&self) -> &DiscreteComplex {
        &self.complex
    }

    fn ranges(&self) -> &[ParamRange] {
        &self.ranges
    }

    fn physics(&self, mu: &[f64]) -> Result<Physics> {
        self.check_parameters(mu)?;
        let k = self.conductivity(mu[0], mu[1])?;
        let (ax, ay) = (mu[2], mu[3]);
        let g = move |x: &Point| ax * x[0] + ay * x[1];
        self.mesh.physics(&k, &|_| 0.0, &g, self.lumping)
    }

    fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"fractured");
        h.update(self.mesh.bulk().fingerprint());
        h.update(self.mesh.network().format().as_bytes());
        h.update(self.aperture.to_le_bytes());
        h.update(format!("{:?}", self.lumping).as_bytes());
        h.finalize().into()
    }
}
