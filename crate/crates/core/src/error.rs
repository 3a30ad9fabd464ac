use std::path::PathBuf;

/// Errors raised by the history-matching engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("covariance factorization failed after jitter reached {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("hyperparameter sampler could not start: {0}")]
    Initialization(String),

    #[error("total predictive variance is zero")]
    DegenerateVariance,

    #[error("need at least {expected} outputs, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("objective returned an invalid value at {point:?}: {value}")]
    Objective { point: Vec<f64>, value: f64 },

    #[error("objective is zero on every initial sample; the non-implausible region is empty at this resolution")]
    FlatObjective,

    #[error("only {available} candidates available for a batch of {requested}")]
    InsufficientCandidates { available: usize, requested: usize },

    #[error("point {point:?} lies outside the domain of {function}")]
    Domain { function: &'static str, point: Vec<f64> },

    #[error("no archive row matches {0:?}")]
    Lookup(Vec<f64>),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("simulator failure: {0}")]
    Simulator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
