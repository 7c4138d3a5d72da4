//! Simulating BSC(p) from BEC(e) under a uniform input: which crossover
//! probabilities are reachable by degrading, which are refuted by the
//! capacity comparison, and what the inner search finds in between.

use serde::{Deserialize, Serialize};

use super::{OsrbError, Result};
use crate::auxsearch::{find_feasible_aux_p2p, SearchConfig};
use crate::probkit::{entropy_of, Kernel, Pmf};
use crate::regions::{
    p2p_inner_check, p2p_outer_check, AuxP2P, OuterConfig, P2PInstance, Verdict, Weights, DEFAULT_EPS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    FeasibleByDegrading,
    CapacityInfeasible,
    Undetermined,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::FeasibleByDegrading => "feasible_by_degrading",
            Zone::CapacityInfeasible => "capacity_infeasible",
            Zone::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseStudyConfig {
    pub erasure: f64,
    /// Shared randomness rate used for the inner checks.
    pub rate: f64,
    pub search: SearchConfig,
    pub outer: OuterConfig,
    pub eps: f64,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        Self {
            erasure: 0.5,
            rate: 0.0,
            search: SearchConfig::default(),
            outer: OuterConfig::default(),
            eps: DEFAULT_EPS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyPoint {
    pub p: f64,
    pub zone: Zone,
    pub outer_lhs: f64,
    pub outer_rhs: f64,
    pub outer_verdict: Verdict,
    /// Verdict of the degrading construction, when it applies.
    pub degrading_verdict: Option<Verdict>,
    /// Best inner-search value in the undetermined band.
    pub search_value: Option<f64>,
    pub search_verdict: Option<Verdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyReport {
    pub erasure: f64,
    pub rate: f64,
    /// `h^-1(e)`: below it the capacity comparison refutes.
    pub capacity_threshold: f64,
    /// `e / 2`: from here on degrading works.
    pub degrading_threshold: f64,
    pub points: Vec<CaseStudyPoint>,
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

/// The root of `h(p) = v` on `[0, 1/2]`.
pub fn inverse_binary_entropy(v: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn bec_bsc_instance(e: f64, p: f64, rate: f64) -> Result<P2PInstance> {
    Ok(P2PInstance::new(Pmf::uniform(2)?, Kernel::bsc(p)?, Kernel::bec(e)?, rate)?)
}

/// Constant-`U` decomposition: send `x`, replace an erasure by a fair coin,
/// then flip with the probability that brings the crossover to `p`.
/// Needs `e / 2 <= p <= 1/2`.
pub fn degrading_aux(e: f64, p: f64) -> Result<AuxP2P> {
    if !(e / 2.0 <= p && p <= 0.5 && e < 1.0) {
        return Err(OsrbError::Invalid(format!("degrading needs e/2 <= p <= 1/2, got e={e}, p={p}")));
    }
    let d = (p - e / 2.0) / (1.0 - e);
    let degrade = Kernel::new(vec![vec![1.0 - d, d], vec![d, 1.0 - d], vec![0.5, 0.5]])?;
    Ok(AuxP2P::constant_u(&Kernel::identity(2), &degrade))
}

/// Classifies one crossover probability.
pub fn classify(p: f64, cfg: &CaseStudyConfig) -> Result<CaseStudyPoint> {
    let e = cfg.erasure;
    let inst = bec_bsc_instance(e, p, cfg.rate)?;
    let outer = p2p_outer_check(&inst, &Weights::default(), &cfg.outer)?;
    let mut point = CaseStudyPoint {
        p,
        zone: Zone::Undetermined,
        outer_lhs: outer.values["lhs"],
        outer_rhs: outer.values["rhs"],
        outer_verdict: outer.verdict,
        degrading_verdict: None,
        search_value: None,
        search_verdict: None,
    };
    if p >= e / 2.0 && p <= 0.5 {
        let r = p2p_inner_check(&inst, &degrading_aux(e, p)?, cfg.eps)?;
        point.degrading_verdict = Some(r.verdict);
        if r.verdict != Verdict::Out {
            point.zone = Zone::FeasibleByDegrading;
            return Ok(point);
        }
    }
    if outer.verdict == Verdict::Out {
        point.zone = Zone::CapacityInfeasible;
        return Ok(point);
    }
    let res = find_feasible_aux_p2p(&inst, &cfg.search).map_err(|e| OsrbError::Invalid(e.to_string()))?;
    let check = p2p_inner_check(&inst, &res.best_point, cfg.eps)?;
    point.search_value = Some(res.best_value);
    point.search_verdict = Some(check.verdict);
    Ok(point)
}

/// Classifies every `p` in `grid`.
pub fn casestudy_bec_bsc(grid: &[f64], cfg: &CaseStudyConfig) -> Result<CaseStudyReport> {
    if !(0.0..1.0).contains(&cfg.erasure) {
        return Err(OsrbError::Invalid(format!("erasure must lie in [0, 1), got {}", cfg.erasure)));
    }
    let points = grid.iter().map(|&p| classify(p, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(CaseStudyReport {
        erasure: cfg.erasure,
        rate: cfg.rate,
        capacity_threshold: inverse_binary_entropy(cfg.erasure),
        degrading_threshold: cfg.erasure / 2.0,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert!((binary_entropy(inverse_binary_entropy(0.5)) - 0.5).abs() < 1e-12);
        assert!((inverse_binary_entropy(0.5) - 0.110_028).abs() < 1e-5);
    }

    #[test]
    fn three_zones() {
        let cfg = CaseStudyConfig {
            search: SearchConfig {
                restarts: 2,
                max_iters: 200,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = casestudy_bec_bsc(&[0.05, 0.3], &cfg).unwrap();
        assert_eq!(r.points[0].zone, Zone::CapacityInfeasible);
        assert!((r.points[0].outer_lhs - 0.7136).abs() < 1e-3);
        assert_eq!(r.points[1].zone, Zone::FeasibleByDegrading);
        assert_eq!(r.points[1].degrading_verdict, Some(Verdict::ClosureIn));
        let mid = classify(0.18, &cfg).unwrap();
        assert_eq!(mid.zone, Zone::Undetermined);
        assert!(mid.search_verdict.is_some());
    }
}
