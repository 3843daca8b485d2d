use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    NonConvergence {
        a: f64,
        b: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("root finder exhausted {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("infeasible privacy interval: lower bound {lower} exceeds upper bound {upper}")]
    Infeasible { lower: f64, upper: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("only {kept} draws were accepted, at least {required} are required")]
    InsufficientAcceptance { kept: u64, required: u64 },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
