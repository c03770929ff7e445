use thiserror::Error;

use crate::space::Level;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural problem with a configuration (bad node count, negative rate, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("could not parse configuration: {0}")]
    Parse(String),

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("level {0:?} is not part of this layout")]
    MissingLevel(Level),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vanishing denominator in {quantity} ({location})")]
    Singular {
        quantity: &'static str,
        location: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid integration plan: {0}")]
    InvalidPlan(String),

    #[error("time step {dt:e} exceeds the stability cap {cap:e} for this Hamiltonian")]
    StepTooLarge { dt: f64, cap: f64 },

    #[error("norm drift {drift:e} at t = {time} exceeds tolerance {tolerance:e}")]
    NormDrift {
        drift: f64,
        time: f64,
        tolerance: f64,
    },

    #[error("non-finite amplitude after step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error(
        "equalizer did not converge after {iterations} iterations (best residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("full-model dimension {dim} for n = {n} exceeds the guard (n <= {max_n}); pass an override to run anyway")]
    DimensionGuard { n: usize, dim: usize, max_n: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
