//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Invalid configuration: bad grid, mismatched dimensions, out-of-range
    /// parameter. The message names the offending field.
    #[error("configuration error: {0}")]
    Config(String),

    /// Two fields (or a field and an operator) live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A value violates a mathematical precondition (e.g. nonpositive
    /// weight, nonpositive metric).
    #[error("domain error: {0}")]
    Domain(String),

    /// A position fell outside the grid extent where evaluation was required.
    #[error("position {position:?} outside grid extent")]
    OutOfDomain { position: Vec<f64> },

    /// A linear solve or propagation step failed numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient samples: need at least {min}, got {got}")]
    InsufficientSamples { min: usize, got: usize },

    /// A wave function is zero (or below the node threshold) everywhere.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
