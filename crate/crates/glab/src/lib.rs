//! Greedy-approximation workbench for sequence spaces.
//!
//! The library computes norms in a handful of concrete Banach sequence
//! spaces, runs thresholding greedy steps with Chebyshev (norm-minimizing)
//! corrections, enumerates basis parameters (democracy, conditionality,
//! quasi-greediness) over finite windows, and assembles witness vectors
//! whose residual/error ratios realize known sharp bounds.

pub mod core;
pub mod spaces;
pub mod optim;
pub mod greedy;
pub mod params;
pub mod experiments;
pub mod cli;

pub use crate::core::{Coef, IndexSet, SignPattern, SparseVector};
pub use crate::spaces::Space;

use thiserror::Error;

/// Errors shared across the workbench.
#[derive(Debug, Error)]
pub enum GlabError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("index {index} exceeds the space window [1, {window}]")]
    WindowExceeded { index: u32, window: u32 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("real space given a non-real coefficient at index {0}")]
    NonRealCoefficient(u32),

    #[error("{0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("bound check failed: {0}")]
    BoundFailed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GlabError>;

/// Comparison tolerance for greedy-set eligibility and sign tie-breaks.
pub const TIE_TOL: f64 = 1e-12;

/// Entries with modulus below this are dropped by sparse arithmetic.
pub const ZERO_DROP: f64 = 1e-15;
