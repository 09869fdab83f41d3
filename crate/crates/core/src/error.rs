use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point reference {0} out of range")]
    Index(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("unsupported combination: {0}")]
    Capability(String),
    #[error("size {size} exceeds cap {cap}")]
    Size { size: usize, cap: usize },
    #[error("malformed structure: {0}")]
    Structure(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("inconsistent trace oracle: {0}")]
    Emulation(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
