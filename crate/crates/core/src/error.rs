use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid simplex point: {0}")]
    InvalidPoint(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid information structure: {0}")]
    InvalidStructure(String),

    #[error("collection is empty")]
    EmptyCollection,

    #[error("relative gain undefined: reference objective is {0}")]
    ZeroDenominator(f64),

    #[error("linear program is {0}")]
    LpStatus(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
