use std::sync::Arc;

use exactflux::io::{cell_velocities, format_vtk};
use exactflux::mesh::{build_structured, read_mesh, BoundaryTag, BoundaryTags, Point, SimplicialMesh};
use exactflux::mixdim::{FractureNetwork, FracturedModel};
use exactflux::rbm::{LayeredModel, ParamRange, ParametricModel};
use exactflux::solver::Solution;

use crate::config::{BoundaryKind, Geometry, RunConfig};
use crate::error::CliError;

pub enum Problem {
    Layered(LayeredModel),
    Fractured(FracturedModel),
}

impl Problem {
    pub fn build(cfg: &RunConfig) -> Result<Self, CliError> {
        let uniform = |m: &SimplicialMesh| {
            BoundaryTags::uniform(
                m,
                match cfg.boundary {
                    BoundaryKind::Pressure => BoundaryTag::Pressure,
                    BoundaryKind::Flux => BoundaryTag::Flux,
                },
            )
        };
        Ok(match &cfg.geometry {
            Geometry::Structured { dim, divisions } => {
                let mesh = Arc::new(build_structured(*dim, *divisions, [0.0; 3], [1.0; 3])?);
                let tags = uniform(&mesh);
                Problem::Layered(LayeredModel::with_tags(mesh, tags)?)
            }
            Geometry::MeshFile { path } => {
                let file = read_mesh(path).map_err(|e| match e {
                    exactflux::Error::Io(io) => CliError::io(path, io),
                    other => CliError::at(path)(other),
                })?;
                let mesh = Arc::new(file.mesh);
                let tags = file.tags.unwrap_or_else(|| uniform(&mesh));
                Problem::Layered(LayeredModel::with_tags(mesh, tags)?)
            }
            Geometry::Fractured { network, max_area, aperture } => {
                let network = match network {
                    Some(path) => FractureNetwork::read(path).map_err(|e| match e {
                        exactflux::Error::Io(io) => CliError::io(path, io),
                        other => CliError::at(path)(other),
                    })?,
                    None => FractureNetwork::benchmark(1e-4, 1e4),
                };
                Problem::Fractured(FracturedModel::mesh_network(network, *max_area, *aperture)?)
            }
        })
    }

    pub fn model(&self) -> &dyn ParametricModel {
        match self {
            Problem::Layered(m) => m,
            Problem::Fractured(m) => m,
        }
    }

    /// Triangulation of the bulk domain.
    pub fn mesh(&self) -> &SimplicialMesh {
        match self {
            Problem::Layered(m) => m.domain().mesh(),
            Problem::Fractured(m) => m.mesh().bulk(),
        }
    }

    pub fn tags(&self) -> Option<&BoundaryTags> {
        match self {
            Problem::Layered(m) => Some(m.domain().tags()),
            Problem::Fractured(_) => None,
        }
    }

    /// Sampling box: the config's when given, else the model's.
    pub fn ranges(&self, cfg: &RunConfig) -> Result<Vec<ParamRange>, CliError> {
        let own = self.model().ranges();
        match cfg.param_ranges() {
            None => Ok(own.to_vec()),
            Some(r) if r.len() == own.len() => Ok(r),
            Some(r) => Err(CliError::Config(format!("{} ranges given, the model has {} parameters", r.len(), own.len()))),
        }
    }

    /// `(n_dof_fom, n_dof_cell, n_dof_step2)`.
    pub fn dof_counts(&self) -> (usize, usize, usize) {
        let c = self.model().complex();
        (c.n_flux() + c.n_cells(), c.n_cells(), c.n_potential())
    }

    /// Bulk pressure and cell velocity in legacy VTK.
    pub fn vtk(&self, sol: &Solution) -> Result<String, CliError> {
        let mesh = self.mesh();
        let (pressure, velocity): (Vec<f64>, Vec<Point>) = match self {
            Problem::Layered(m) => {
                let faces = m.domain().prolong_flux(&sol.flux);
                (sol.pressure.clone(), cell_velocities(mesh, &faces))
            }
            Problem::Fractured(m) => {
                let n = m.mesh().n_triangles();
                let u = (0..n)
                    .map(|t| {
                        let [x, y] = m.mesh().cell_velocity(t, &sol.flux);
                        [x, y, 0.0]
                    })
                    .collect();
                (sol.pressure[..n].to_vec(), u)
            }
        };
        Ok(format_vtk(mesh, &pressure, &velocity)?)
    }
}
