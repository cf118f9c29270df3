use thiserror::Error;

/// Errors produced anywhere in the identification pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {node} has zero weighted degree; D^-1 A is undefined")]
    SingularDegree { node: usize },

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("floating-point overflow at sample {index}")]
    Overflow { index: usize },

    #[error("matrix exponential overflowed the floating-point range")]
    MatrixExpOverflow,

    #[error("empty output sequence")]
    EmptySequence,

    #[error("insufficient data: rank {rank} needs {needed} samples, have {available}")]
    InsufficientData {
        rank: usize,
        needed: usize,
        available: usize,
    },

    #[error("singular deconvolution: node impulse weight {index} is numerically zero")]
    SingularDeconvolution { index: usize },

    #[error("recovered root {root} is numerically zero; logarithm undefined")]
    LogSingular { root: String },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("requested observability pattern forces an all-zero output vector")]
    InfeasiblePattern,

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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
