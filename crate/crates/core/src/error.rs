use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node index {index} out of range for a grid of {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("coordinate {value} on axis {axis} outside 1..={side}")]
    CoordinateOutOfRange { axis: usize, value: usize, side: usize },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty conditioning event: P(X > {t}) = 0")]
    EmptyConditioning { t: f64 },

    #[error("shape does not fit the grid: {0}")]
    ShapeOutOfBounds(String),

    #[error("self-avoiding walk generation failed after {restarts} restarts")]
    RestartBudgetExhausted { restarts: usize },

    #[error("insufficient tail mass: {0}")]
    InsufficientTail(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
