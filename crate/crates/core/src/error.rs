//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown kernel family `{0}`")]
    UnknownKernel(String),

    #[error("invalid kernel parameters for `{family}`: {reason}")]
    InvalidParams { family: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite sample {value} at grid node {node:?}")]
    NonFiniteSample { node: Vec<f64>, value: String },

    #[error("quadrature did not converge at node {node:?} (partial value {partial}, error {error:.3e})")]
    QuadratureFailure {
        node: Vec<f64>,
        partial: String,
        error: f64,
    },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("divergent target moment: {0}")]
    DivergentTarget(String),

    #[error("log-grid aliasing: {0}")]
    Aliasing(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
