use std::io;

/// Errors raised by mesh handling, operator assembly, the solvers and the
/// reduced-basis machinery.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh file, line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("boundary tagging: {0}")]
    Boundary(String),

    #[error("operator construction: {0}")]
    Operator(String),

    #[error("linear solver: {0}")]
    Solver(String),

    #[error("incompatible problem data: {0}")]
    Incompatible(String),

    #[error("reduced basis: {0}")]
    Basis(String),

    #[error("artifact format: {0}")]
    Artifact(String),

    #[error("artifact does not match the discretization: {0}")]
    ArtifactMismatch(String),

    #[error("fracture network: {0}")]
    Fracture(String),

    #[error("fracture file, line {line}: {msg}")]
    FractureParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
