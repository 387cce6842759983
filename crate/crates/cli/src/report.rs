use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// One row of a run report. Empty fields mean "not measured in this run".
#[derive(Debug, Clone, Default, Serialize)]
pub struct ErrorReport {
    pub case: String,
    pub n_dof_fom: usize,
    pub n_dof_cell: usize,
    pub n_dof_step2: usize,
    pub n_modes: Option<usize>,
    pub err_p: Option<f64>,
    pub err_q: Option<f64>,
    pub err_mass: Option<f64>,
    pub t_offline_s: Option<f64>,
    pub t_online_s: Option<f64>,
    pub t_fom_s: Option<f64>,
}

pub const MASS_LIMIT: f64 = 1e-13;

impl ErrorReport {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let io = csv_error(path);
        let mut w = csv::Writer::from_path(path).map_err(&io)?;
        w.serialize(self).map_err(&io)?;
        w.flush().map_err(|e| CliError::io(path, e))
    }

    pub fn mass_ok(&self) -> bool {
        self.err_mass.map_or(true, |m| m <= MASS_LIMIT)
    }
}

#[derive(Serialize)]
struct SigmaRow {
    index: usize,
    sigma: f64,
    kept: bool,
}

/// Singular values of the snapshot matrix, largest first.
pub fn write_singular_values(path: &Path, sigma: &[f64], n_modes: usize) -> Result<(), CliError> {
    let io = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&io)?;
    for (index, &sigma) in sigma.iter().enumerate() {
        w.serialize(SigmaRow { index, sigma, kept: index < n_modes }).map_err(&io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::Config(format!("{}: {other:?}", path.display())),
    }
}
