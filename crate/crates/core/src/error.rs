use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite objective value {value} at step {step}")]
    NonFinite { value: f64, step: f64 },

    #[error("unknown task id {0}")]
    UnknownTask(usize),

    #[error("partition is not faithful: point {0} is not assigned to its own cell")]
    UnfaithfulPartition(usize),

    #[error("fixed-point iteration did not converge after {sweeps} sweeps (last change {last_change:e})")]
    NoConvergence {
        sweeps: usize,
        last_change: f64,
        last: Vec<f64>,
    },

    #[error("fixed-point iteration entered a limit cycle of period {period}")]
    LimitCycle { period: usize, last: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
