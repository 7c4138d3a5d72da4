//! Numerical evaluation of the inner and outer bounds for channel simulation.
//!
//! Every check builds the joint law of its auxiliary decomposition with
//! [`crate::probkit::compose`], evaluates one slack per inequality (left side
//! minus right side, in bits) and grades the result:
//!
//! * `STRICT_IN`: every slack `> eps` and the achieved marginal is within
//!   `eps` (unhalved L1) of the target;
//! * `CLOSURE_IN`: every slack `>= -eps` and the marginal matches;
//! * `OUT`: anything else.
//!
//! Axis labels are `X, Y, Z` (sources and targets), `U, V, W` (auxiliaries)
//! and `X~, Y~, Z~` (resource input and outputs). Product alphabets are
//! flattened row-major, first variable slowest.

mod bc;
mod mac;
pub mod oracle;
mod outer;
mod p2p;

pub use bc::{bc_inner_check, bc_joint, AuxBc, BcInstance};
pub use mac::{mac_inner_check, mac_joint, AuxMac, MacInstance};
pub use outer::{
    cuff_from_p2p, cuff_joint, cuff_region_check, nonbayesian_outer_check, p2p_outer_check,
    p2p_outer_lhs, simplex_grid, wire_rate, OuterConfig, OUTER_SLACK,
};
pub use p2p::{p2p_inner_check, p2p_joint, AuxP2P, P2PInstance};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probkit::{JointPmf, ProbError};

/// Default grading tolerance in bits.
pub const DEFAULT_EPS: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, RegionError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    StrictIn,
    ClosureIn,
    Out,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::StrictIn => "STRICT_IN",
            Verdict::ClosureIn => "CLOSURE_IN",
            Verdict::Out => "OUT",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionReport {
    pub verdict: Verdict,
    /// Slack of each inequality, keyed by the inequality as written.
    pub slacks: IndexMap<String, f64>,
    /// L1 distance between the achieved and the target marginal.
    pub marginal_tv: f64,
    /// Auxiliary numbers (bound values, search statistics).
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub values: IndexMap<String, f64>,
    /// Maximizing input pmf of an outer bound, when one was searched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_input: Option<Vec<f64>>,
}

impl RegionReport {
    /// Grades `slacks` and `marginal_tv` with tolerance `eps`.
    pub fn graded(slacks: IndexMap<String, f64>, marginal_tv: f64, eps: f64) -> Self {
        Self {
            verdict: grade(slacks.values().copied(), marginal_tv, eps),
            slacks,
            marginal_tv,
            values: IndexMap::new(),
            best_input: None,
        }
    }

    pub fn min_slack(&self) -> f64 {
        self.slacks
            .values()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn grade(slacks: impl IntoIterator<Item = f64>, marginal_tv: f64, eps: f64) -> Verdict {
    let min = slacks.into_iter().fold(f64::INFINITY, f64::min);
    if marginal_tv > eps || min.is_nan() || min < -eps {
        Verdict::Out
    } else if min > eps {
        Verdict::StrictIn
    } else {
        Verdict::ClosureIn
    }
}

/// Non-negative weights `(beta, gamma, theta)` of the converse functional.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl Weights {
    pub fn new(beta: f64, gamma: f64, theta: f64) -> Result<Self> {
        let w = Self { beta, gamma, theta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.beta, self.gamma, self.theta] {
            if !v.is_finite() || v < 0.0 {
                return Err(RegionError::Invalid(format!(
                    "weights must be finite and non-negative, got {self:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.beta + self.gamma + self.theta
    }

    pub fn is_zero(&self) -> bool {
        self.sum() == 0.0
    }
}

/// `I(A;B|C)` on a joint, with labels split on single characters or `~`
/// suffixes (`"XY~"` is `[X, Y~]`).
pub(crate) fn info(j: &JointPmf, a: &str, b: &str, c: &str) -> Result<f64> {
    let (a, b, c) = (labels(a), labels(b), labels(c));
    Ok(j.mutual_information(&strs(&a), &strs(&b), &strs(&c))?)
}

pub(crate) fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

pub(crate) fn labels(s: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for ch in s.chars() {
        match ch {
            '~' | '\'' => out.last_mut().expect("suffix follows a letter").push(ch),
            c => out.push(c.to_string()),
        }
    }
    out
}

/// Checks that a kernel's output splits as `product * rest` and returns `rest`.
pub(crate) fn split_card(n: usize, by: usize, what: &str) -> Result<usize> {
    if by == 0 || !n.is_multiple_of(by) || n == 0 {
        return Err(RegionError::Invalid(format!(
            "{what}: {n} is not a multiple of {by}"
        )));
    }
    Ok(n / by)
}

pub(crate) fn check_rate(r: f64, name: &str) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(RegionError::Invalid(format!(
            "{name} must be a finite non-negative rate, got {r}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_splitting() {
        assert_eq!(labels("UY~"), vec!["U", "Y~"]);
        assert_eq!(labels("U'XY"), vec!["U'", "X", "Y"]);
        assert!(labels("").is_empty());
    }

    #[test]
    fn grading() {
        assert_eq!(grade([1.0, 0.5], 0.0, 1e-7), Verdict::StrictIn);
        assert_eq!(grade([1.0, 0.0], 0.0, 1e-7), Verdict::ClosureIn);
        assert_eq!(grade([1.0, -1e-8], 0.0, 1e-7), Verdict::ClosureIn);
        assert_eq!(grade([1.0, -1e-6], 0.0, 1e-7), Verdict::Out);
        assert_eq!(grade([1.0], 1e-3, 1e-7), Verdict::Out);
    }
}
