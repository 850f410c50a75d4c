use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("time vector must start at 0, found {0}")]
    InvalidAnchor(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("no convergence after {iterations} iterations (last change {last_change})")]
    NoConvergence { iterations: usize, last_change: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
