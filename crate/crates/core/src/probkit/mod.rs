//! Exact finite discrete probability algebra.
//!
//! Everything else in the crate is built from three value types:
//! [`Pmf`] (a probability vector), [`Kernel`] (a row-stochastic matrix) and
//! [`JointPmf`] (a dense table over named axes). All logarithms are base 2
//! and `0 log 0 = 0`.
//!
//! Total variation is the **unhalved** L1 distance `sum |p - q|`, so it lives
//! in `[0, 2]`. Many references halve it; this crate never does.

mod joint;
mod kernel;
mod pmf;

pub use joint::{compose, total_variation, Axis, Factor, JointPmf};
pub use kernel::Kernel;
pub use pmf::{entropy_of, Pmf};

use thiserror::Error;

/// Sum-to-one tolerance that every stored distribution satisfies.
pub const PROB_TOL: f64 = 1e-12;
/// Inputs whose mass deviates from 1 by at most this much are renormalized;
/// anything further off is rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;
/// Mutual informations in `[-MI_CLAMP_TOL, 0)` are reported as exactly 0.
pub const MI_CLAMP_TOL: f64 = 1e-10;
/// Default cap on the number of cells a dense joint table may hold.
pub const DEFAULT_CELL_CAP: usize = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("empty distribution")]
    Empty,
    #[error("entry {index} is negative or not finite ({value})")]
    InvalidEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, which is not within {RENORMALIZE_TOL} of 1")]
    NotNormalized { sum: f64 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate axis `{0}`")]
    DuplicateAxis(String),
    #[error("variable sets overlap on `{0}`")]
    OverlappingSubsets(String),
    #[error("empty variable set")]
    EmptyVariableSet,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("table would need {cells} cells, above the cap of {cap}")]
    CapExceeded { cells: u128, cap: usize },
    #[error("dangling wire: kernel input `{0}` is not an axis of the joint")]
    DanglingWire(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// Validates a raw probability vector and renormalizes small drift.
pub(crate) fn normalize_probs(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(ProbError::Empty);
    }
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(ProbError::InvalidEntry { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > RENORMALIZE_TOL {
        return Err(ProbError::NotNormalized { sum });
    }
    if sum != 1.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(probs)
}
