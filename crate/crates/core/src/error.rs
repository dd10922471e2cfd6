use thiserror::Error;

/// Errors raised by the optimizers, the search-space model and the harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix entry ({row}, {col}) is not finite")]
    InvalidMatrix { row: usize, col: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("dimension {0} is not discrete")]
    NotDiscrete(usize),

    /// The mean of a discrete dimension lies outside the interior threshold
    /// range, so the edge correction must be used instead.
    #[error("mean {mean} of dimension {dim} lies outside the interior threshold range")]
    EdgeCase { dim: usize, mean: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("objective value of candidate {0} is NaN")]
    Evaluation(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
