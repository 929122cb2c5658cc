use thiserror::Error;

/// Errors raised by the solver, the metrics and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{quantity} = {value} is outside the admissible domain ({expected})")]
    Domain {
        quantity: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid velocity model: {0}")]
    InvalidModel(String),

    #[error("invalid initial datum: {0}")]
    InvalidDatum(String),

    #[error("invalid particle configuration: {0}")]
    InvalidConfiguration(String),

    #[error("function is not non-decreasing: {0}")]
    NotMonotone(String),

    #[error("total masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("integration failed at t = {time} (step {step:e} below floor): {reason}")]
    IntegrationFailure {
        time: f64,
        step: f64,
        reason: String,
        positions: Vec<f64>,
    },

    #[error("unsupported flux: {0}")]
    UnsupportedFlux(String),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
