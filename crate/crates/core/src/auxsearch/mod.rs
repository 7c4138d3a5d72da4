//! Numerical search over auxiliary decompositions.
//!
//! Kernels are parameterized by per-row softmax logits and optimized with
//! exact gradients (Adam). Marginal constraints enter as a quadratic penalty
//! whose weight ramps up during a run; afterwards a linear program moves one
//! kernel to the nearest point that matches the required marginal exactly.
//! Each reported value is recomputed from the returned kernels through
//! [`crate::regions`].
//!
//! Restarts run in parallel with per-restart generators seeded from
//! `(seed, restart index)`; the reduction keeps the best value and breaks
//! ties toward the lowest index, so results do not depend on the number of
//! workers.

mod engine;
mod inner;
mod markov;

pub use inner::{find_feasible_aux_bc, find_feasible_aux_mac, find_feasible_aux_p2p, MARGINAL_PENALTY};
pub use markov::{
    markov_value, max_resource_expression, min_markov_functional, MarkovPoint, ResourcePoint, MARKOV_PENALTY,
    MARKOV_RESIDUAL,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probkit::ProbError;
use crate::regions::RegionError;
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("invalid search config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SearchError>;

/// Learning rate at iteration `k` is `initial * decay^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSchedule {
    pub initial: f64,
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    /// `None` selects the default for the search at hand.
    pub card_u: Option<usize>,
    pub card_v: Option<usize>,
    pub card_w: Option<usize>,
    pub step: StepSchedule,
    /// Early-stop threshold on the per-iteration change of the objective.
    pub tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 8,
            max_iters: 600,
            card_u: None,
            card_v: None,
            card_w: None,
            step: StepSchedule {
                initial: 0.1,
                decay: 0.996,
            },
            tol: 1e-10,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SearchError::Config(m.into()));
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if [self.card_u, self.card_v, self.card_w].contains(&Some(0)) {
            return bad("cardinalities must be at least 1");
        }
        if !(self.step.initial > 0.0 && self.step.decay > 0.0 && self.step.decay <= 1.0) {
            return bad("step schedule needs initial > 0 and decay in (0, 1]");
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be non-negative");
        }
        Ok(())
    }

    pub(crate) fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult<P> {
    pub best_value: f64,
    pub best_point: P,
    /// Final value of each restart, in restart order.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub best_restart: usize,
}

/// Runs `restarts` tasks and keeps the best (largest) value; ties go to the
/// lowest index. `None` marks a restart that produced no usable point.
pub(crate) fn best_of<P: Send>(
    cfg: &SearchConfig,
    restarts: usize,
    run: impl Fn(usize, &mut ChaCha8Rng) -> Option<(f64, P)> + Sync,
) -> Option<(usize, f64, P, Vec<f64>)> {
    let outs: Vec<Option<(f64, P)>> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::indexed(cfg.seed, i as u64));
            run(i, &mut rng)
        })
        .collect();
    let trace: Vec<f64> = outs
        .iter()
        .map(|o| o.as_ref().map_or(f64::NAN, |o| o.0))
        .collect();
    let mut best: Option<(usize, f64, P)> = None;
    for (i, o) in outs.into_iter().enumerate() {
        if let Some((v, p)) = o {
            if !v.is_nan() && best.as_ref().is_none_or(|b| v > b.1) {
                best = Some((i, v, p));
            }
        }
    }
    best.map(|(i, v, p)| (i, v, p, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_lowest_index() {
        let cfg = SearchConfig::default();
        let (i, v, p, trace) = best_of(&cfg, 5, |i, _| Some(((i % 2) as f64, i))).unwrap();
        assert_eq!((i, v, p), (1, 1.0, 1));
        assert_eq!(trace, vec![0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let mut c = SearchConfig::default();
        c.restarts = 0;
        assert!(c.validate().is_err());
        let mut c = SearchConfig::default();
        c.card_u = Some(0);
        assert!(c.validate().is_err());
    }
}
