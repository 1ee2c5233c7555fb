//! Surrogate-assisted constrained multi-objective optimization.
//!
//! The library implements the GDE3 differential-evolution baseline and the
//! MODEBI variants (GDE3 + per-response Gaussian-Process preselection) for
//! expensive black-box problems with constraints evaluated across a set of
//! operating-condition corners. Synthetic benchmark problems stand in for a
//! real simulator, and the harness module drives budgeted, reproducible runs.

pub mod bench;
pub mod evolve;
pub mod gp;
pub mod harness;
pub mod hv;
pub mod metrics;
pub mod modebi;
pub mod problem;

pub use problem::{
    AlgoConfig, Corner, DesignPoint, EvalSource, Evaluation, Individual, Population, ProblemSpec,
    ResponseSpec, VariableKind, VariableSpec,
};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown algorithm '{0}'")]
    UnknownAlgorithm(String),
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
    #[error("budget below initialization cost {needed} (pop_size x corners), got {got}")]
    BudgetTooSmall { needed: u64, got: u64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    Numeric(String),
    #[error("gram matrix not positive definite after jitter escalation")]
    NotPositiveDefinite,
    #[error("hypervolume dimension {0} exceeds exact-method limit 8; use the Monte Carlo variant")]
    TooManyObjectives(usize),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
