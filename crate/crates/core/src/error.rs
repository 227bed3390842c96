use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge list contains no edges")]
    NoEdges,

    #[error("covariance diagonal is not homogeneous (spread {spread:e})")]
    HeterogeneousDiagonal { spread: f64 },

    #[error(
        "off-diagonal entry ({row}, {col}) = {value} is not strictly below the diagonal {diagonal}"
    )]
    DominanceViolated {
        row: usize,
        col: usize,
        value: f64,
        diagonal: f64,
    },

    #[error("matrix is not symmetric positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("could not draw a valid jittered covariance after {attempts} attempts")]
    JitterRejected { attempts: usize },

    #[error("need at least {required} samples, have {available}")]
    InsufficientSamples { required: usize, available: usize },

    #[error("matrix is singular even after ridge regularization{}", lag.map(|k| format!(" (lag {k})")).unwrap_or_default())]
    Singular { lag: Option<i64> },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("feature set carries no labels")]
    Unlabeled,

    #[error("pair lists differ")]
    PairMismatch,

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
