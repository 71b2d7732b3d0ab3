use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the inference engine and its helpers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scale parameter must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("gamma must be positive, got {0}")]
    NonPositiveGamma(f64),

    #[error("gamma {0} is outside the admissible interval [{1}, {2}]")]
    GammaOutOfRange(f64, f64, f64),

    #[error("regression model evaluated without a covariate row")]
    MissingCovariates,

    #[error("parameter vector has length {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("weighted sample is degenerate: {0}")]
    DegenerateSample(String),

    #[error("particle count must be at least 2, got {0}")]
    InvalidParticleCount(usize),

    #[error("particle weights are not a valid probability vector")]
    DegenerateWeights,

    #[error("sample covariance is singular")]
    SingularCovariance,

    #[error("gradient is not finite: {0}")]
    NonFiniteGradient(f64),

    #[error("contamination percentage must lie in [0, 100], got {0}")]
    InvalidTau(f64),

    #[error("evidence estimation needs a proper prior")]
    ImproperPriorForEvidence,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}
