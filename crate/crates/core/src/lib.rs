//! Mixed-integer black-box optimization with the covariance matrix
//! adaptation evolution strategy.
//!
//! Three optimizers share one CMA-ES core:
//!
//! * [`cmaes`]: the standard CMA-ES with weighted recombination, cumulative
//!   step-size adaptation and rank-one plus rank-μ covariance updates.
//! * [`int_mutation`]: CMA-ES-IM, which injects integer mutations into
//!   candidates whose coordinate-wise deviation has dropped below the
//!   discretization granularity and masks those coordinates out of the
//!   step-size update.
//! * [`margin`]: CMA-ES with Margin, which keeps a lower bound on the
//!   marginal probability that each discrete coordinate changes value by
//!   correcting the mean and a diagonal affine transform after every update.
//!
//! [`space`] describes mixed search spaces and their discretization,
//! [`benchmarks`] provides the six mixed-integer test functions and
//! [`harness`] runs seeded trials, batches and the margin-parameter grid.

// Negated comparisons are deliberate: they send NaN down the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod cmaes;
mod error;
pub mod harness;
pub mod int_mutation;
pub mod margin;
pub mod numerics;
pub mod space;

pub use benchmarks::{Benchmark, BenchmarkKind};
pub use cmaes::{CmaParams, CmaState, GenerationRecord};
pub use error::{Error, Result};
pub use harness::{
    AlphaSetting, BatchSummary, Method, StopReason, SummaryRow, TrialConfig, TrialResult,
};
pub use int_mutation::{BoxBounds, GranularityMatrix, ImState};
pub use margin::{MarginProbabilities, MarginRecord, MarginState};
pub use numerics::{Rng, SymEigen, SymMatrix};
pub use space::{SearchSpace, Thresholds, VariableSpec};
