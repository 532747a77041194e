use thiserror::Error;

/// Errors shared by all solvers in the crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable system: {0}")]
    Unstable(String),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("unreachable state: {0}")]
    Unreachable(String),

    #[error("state space too large: {0}")]
    TooLarge(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("not saturated: offered load {offered} does not exceed capacity {capacity}")]
    NotSaturated { offered: f64, capacity: f64 },

    #[error("need at least {needed} observations, got {got}")]
    SampleSize { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn unstable(msg: impl Into<String>) -> Self {
        Error::Unstable(msg.into())
    }
}
