use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by solvers, generators and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("direction vector has zero norm")]
    ZeroDirection,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("orthogonalization breakdown: |v| = {norm:e} below tolerance {tol:e}")]
    Breakdown { norm: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not a descent direction (grad_dot_p = {0:e})")]
    NotDescent(f64),

    #[error("line search failed after {0} backtracks")]
    LineSearchFailed(usize),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("dimension {dim} too large for dense materialization (limit {limit})")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported MatrixMarket field `{0}`")]
    UnsupportedField(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
