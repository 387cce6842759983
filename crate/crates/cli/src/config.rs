use std::path::{Path, PathBuf};

use exactflux::linalg::{LinearSolverConfig, SolverMethod};
use exactflux::rbm::{ParamRange, Scale, DEFAULT_THRESHOLD};
use serde::Deserialize;

use crate::error::CliError;

/// Contents of the JSON run configuration. Relative paths are resolved
/// against the directory holding the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_case")]
    pub case: String,
    pub geometry: Geometry,
    #[serde(default)]
    pub boundary: BoundaryKind,
    /// Overrides the model's default sampling box.
    #[serde(default)]
    pub ranges: Option<Vec<RangeConfig>>,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub query: Option<Vec<f64>>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    /// Kuhn triangulation of the unit square or cube.
    Structured { dim: usize, divisions: usize },
    /// Mesh in the plain-text mesh format; its boundary tags are used when present.
    MeshFile { path: PathBuf },
    /// Unit square cut by a fracture network. Without a `network` file the
    /// ten-fracture benchmark is used.
    Fractured {
        #[serde(default)]
        network: Option<PathBuf>,
        max_area: f64,
        #[serde(default = "default_aperture")]
        aperture: f64,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    #[default]
    Pressure,
    Flux,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { method: default_method(), rel_tol: default_rel_tol(), max_iter: default_max_iter() }
    }
}

fn default_case() -> String {
    "run".into()
}
fn default_snapshots() -> usize {
    20
}
fn default_eps() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_workers() -> usize {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_aperture() -> f64 {
    exactflux::mixdim::DEFAULT_APERTURE
}
fn default_method() -> String {
    "auto".into()
}
fn default_rel_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    50_000
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.geometry {
            Geometry::MeshFile { path } => resolve(path),
            Geometry::Fractured { network: Some(path), .. } => resolve(path),
            _ => {}
        }
        resolve(&mut cfg.out);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.eps > 0.0) {
            return Err(CliError::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.snapshots == 0 {
            return Err(CliError::Config("snapshots must be at least 1".into()));
        }
        if let Some(ranges) = self.param_ranges() {
            for r in &ranges {
                r.validate()?;
            }
        }
        self.linear_solver()?;
        Ok(())
    }

    pub fn param_ranges(&self) -> Option<Vec<ParamRange>> {
        self.ranges.as_ref().map(|rs| {
            rs.iter()
                .map(|r| ParamRange {
                    name: r.name.clone(),
                    lo: r.lo,
                    hi: r.hi,
                    scale: if r.log { Scale::Log } else { Scale::Uniform },
                })
                .collect()
        })
    }

    pub fn linear_solver(&self) -> Result<LinearSolverConfig, CliError> {
        let method = match self.solver.method.as_str() {
            "auto" => SolverMethod::Auto,
            "cg" => SolverMethod::Cg,
            "direct" => SolverMethod::Direct,
            other => return Err(CliError::Config(format!("unknown solver method `{other}`"))),
        };
        Ok(LinearSolverConfig {
            method,
            rel_tol: self.solver.rel_tol,
            max_iter: self.solver.max_iter,
            ..LinearSolverConfig::default()
        })
    }
}
