use std::path::Path;

use exactflux::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core { context: String, source: Error },

    #[error(transparent)]
    Bare(#[from] Error),

    #[error("FAILED: {0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    /// Tags a library error with the file it came from.
    pub fn at(path: &Path) -> impl FnOnce(Error) -> Self + '_ {
        move |source| Self::Core { context: path.display().to_string(), source }
    }

    /// 1 solver failure, 2 I/O or configuration, 3 artifact mismatch.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } | Self::Config(_) => 2,
            Self::Failed(_) => 1,
            Self::Core { source, .. } | Self::Bare(source) => match source {
                Error::ArtifactMismatch(_) => 3,
                Error::Operator(_) | Error::Solver(_) | Error::Basis(_) => 1,
                _ => 2,
            },
        }
    }
}
