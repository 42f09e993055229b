use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("value {value} outside the open interval (0, 1) for {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("chain is reducible: states {unreachable:?} cannot be reached from state 0 (or cannot reach it)")]
    Reducible { unreachable: Vec<usize> },

    #[error("transition row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("no convergence after {iters} iterations (span residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("no feasible candidate among the sampled policies")]
    NoFeasibleCandidate,
}

pub type Result<T> = std::result::Result<T, Error>;
