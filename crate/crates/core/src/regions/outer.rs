use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::p2p::marginal_tv;
use super::{check_rate, info, AuxP2P, P2PInstance, RegionError, RegionReport, Result, Verdict, Weights};
use crate::auxsearch::{max_resource_expression, min_markov_functional, SearchConfig};
use crate::probkit::{compose, Factor, JointPmf, Kernel, Pmf};

/// Key of the single slack reported by the converse checks.
pub const OUTER_SLACK: &str = "RHS - LHS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuterConfig {
    pub search: SearchConfig,
    /// Resolution of the input-pmf grid of the non-Bayesian check.
    pub grid: usize,
    pub eps: f64,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            grid: 8,
            eps: super::DEFAULT_EPS,
        }
    }
}

fn search_err(e: crate::auxsearch::SearchError) -> RegionError {
    RegionError::Invalid(e.to_string())
}

/// All pmfs on `n` symbols whose entries are multiples of `1 / resolution`,
/// in lexicographic order of the numerators.
pub fn simplex_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, slots - 1, cur, out);
            cur.pop();
        }
    }
    if n == 0 || resolution == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    rec(resolution, n, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|v| v.into_iter().map(|k| k as f64 / resolution as f64).collect())
        .collect()
}

/// `I(X;Y) + min over X - U - Y of [beta I(U;XY) + gamma I(U;X) + theta
/// I(U;Y)]` on a two-variable joint, with the minimizer's residual.
pub fn p2p_outer_lhs(joint_xy: &JointPmf, weights: &Weights, cfg: &SearchConfig) -> Result<(f64, f64)> {
    weights.validate()?;
    let names = joint_xy.axis_names();
    if names.len() != 2 {
        return Err(RegionError::Invalid(format!("expected two axes, got {names:?}")));
    }
    let ixy = joint_xy.mutual_information(&[names[0]], &[names[1]], &[])?;
    if weights.is_zero() {
        return Ok((ixy, 0.0));
    }
    let m = min_markov_functional(joint_xy, weights, cfg).map_err(search_err)?;
    Ok((ixy + m.best_value, m.best_point.residual))
}

fn outer_report(lhs: f64, rhs: f64, eps: f64) -> RegionReport {
    let mut slacks = IndexMap::new();
    slacks.insert(OUTER_SLACK.to_string(), rhs - lhs);
    let verdict = if lhs > rhs + eps { Verdict::Out } else { Verdict::ClosureIn };
    let mut values = IndexMap::new();
    values.insert("lhs".into(), lhs);
    values.insert("rhs".into(), rhs);
    RegionReport {
        verdict,
        slacks,
        marginal_tv: 0.0,
        values,
        best_input: None,
    }
}

/// Evaluates the converse with weights `(beta, gamma, theta)`: `OUT` when
/// the left side exceeds the right side by more than `eps` (simulation
/// impossible), `CLOSURE_IN` otherwise (not refuted). `best_input` is the
/// maximizing resource input law found.
pub fn p2p_outer_check(inst: &P2PInstance, weights: &Weights, cfg: &OuterConfig) -> Result<RegionReport> {
    inst.validate()?;
    let (lhs, lhs_res) = p2p_outer_lhs(&inst.target_joint()?, weights, &cfg.search)?;
    let res = max_resource_expression(&inst.resource, weights, &cfg.search).map_err(search_err)?;
    let rhs = res.best_value + weights.sum() * inst.rate;
    let mut r = outer_report(lhs, rhs, cfg.eps);
    r.values.insert("resource_term".into(), res.best_value);
    r.values.insert("resource_information".into(), res.best_point.information);
    r.values.insert("lhs_residual".into(), lhs_res);
    if let Some(m) = &res.best_point.markov {
        r.values.insert("rhs_residual".into(), m.residual);
    }
    r.values.insert("restarts".into(), cfg.search.restarts as f64);
    r.values.insert("evaluations".into(), res.best_point.evaluations as f64);
    r.best_input = Some(res.best_point.input_pmf);
    Ok(r)
}

/// The converse with its left side also maximized over input laws on the
/// grid of resolution `cfg.grid`; `best_input` is the maximizing input law
/// of the left side.
pub fn nonbayesian_outer_check(
    target: &Kernel,
    resource: &Kernel,
    rate: f64,
    weights: &Weights,
    cfg: &OuterConfig,
) -> Result<RegionReport> {
    check_rate(rate, "rate")?;
    weights.validate()?;
    let grid = simplex_grid(target.n_in(), cfg.grid.max(1));
    let lhs: Vec<f64> = grid
        .par_iter()
        .map(|p| {
            let j = JointPmf::from_channel("X", &Pmf::new(p.clone())?, "Y", target)?;
            Ok(p2p_outer_lhs(&j, weights, &cfg.search)?.0)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in lhs.iter().enumerate() {
        if *v > lhs[best] {
            best = i;
        }
    }
    let res = max_resource_expression(resource, weights, &cfg.search).map_err(search_err)?;
    let rhs = res.best_value + weights.sum() * rate;
    let mut r = outer_report(lhs[best], rhs, cfg.eps);
    r.values.insert("grid_points".into(), grid.len() as f64);
    r.best_input = Some(grid[best].clone());
    Ok(r)
}

/// Joint of `(X, U', Y)` for `p(x) p(u'|x) p(y|u')`.
pub fn cuff_joint(inst: &P2PInstance, aux_u: &Kernel, dec: &Kernel) -> Result<JointPmf> {
    inst.validate()?;
    if aux_u.n_in() != inst.card_x() || dec.n_in() != aux_u.n_out() || dec.n_out() != inst.card_y() {
        return Err(RegionError::Invalid("kernel shapes do not chain X -> U' -> Y".into()));
    }
    Ok(compose(
        "X",
        &inst.input_pmf,
        &[
            Factor::new(aux_u, &["X"], &[("U'", aux_u.n_out())]),
            Factor::new(dec, &["U'"], &[("Y", inst.card_y())]),
        ],
    )?)
}

/// Grades `(aux_u, dec)` against the region of a noiseless link of rate
/// `wire_rate` with shared randomness at `inst.rate`. A marginal mismatch
/// is reported in `marginal_tv`, not raised.
pub fn cuff_region_check(
    wire_rate: f64,
    inst: &P2PInstance,
    aux_u: &Kernel,
    dec: &Kernel,
    eps: f64,
) -> Result<RegionReport> {
    check_rate(wire_rate, "wire rate")?;
    let j = cuff_joint(inst, aux_u, dec)?;
    let mut slacks = IndexMap::new();
    slacks.insert("R + C~ > I(U';XY)".into(), inst.rate + wire_rate - info(&j, "U'", "XY", "")?);
    slacks.insert("C~ > I(U';X)".into(), wire_rate - info(&j, "U'", "X", "")?);
    let tv = marginal_tv(&j, &["X", "Y"], &inst.target_joint()?)?;
    Ok(RegionReport::graded(slacks, tv, eps))
}

/// `log2` of the number of distinct outputs of a deterministic resource,
/// the largest `H(Y~)` it can carry; `None` for a noisy resource.
pub fn wire_rate(resource: &Kernel) -> Option<f64> {
    if !resource.is_deterministic() {
        return None;
    }
    let mut used = vec![false; resource.n_out()];
    for row in resource.rows() {
        let y = row.iter().position(|&p| p == 1.0).expect("deterministic row");
        used[y] = true;
    }
    Some((used.iter().filter(|&&u| u).count() as f64).log2())
}

/// Maps a point-to-point decomposition to `U' = (U, Y~)`: returns
/// `p(u, y~ | x)` (index `u |Y~| + y~`) and `p(y | u, y~)`.
pub fn cuff_from_p2p(inst: &P2PInstance, aux: &AuxP2P) -> Result<(Kernel, Kernel)> {
    let cu = aux.card_u(inst)?;
    let (nxt, nyt, nx, ny) = (inst.card_xt(), inst.card_yt(), inst.card_x(), inst.card_y());
    let w = &inst.resource;
    let aux_u = Kernel::from_fn(nx, cu * nyt, |x, k| {
        let (u, yt) = (k / nyt, k % nyt);
        (0..nxt).map(|xt| aux.enc.get(x, u * nxt + xt) * w.get(xt, yt)).sum()
    })?;
    let dec = Kernel::from_fn(cu * nyt, ny, |k, y| {
        let (u, yt) = (k / nyt, k % nyt);
        aux.dec.get(yt * cu + u, y)
    })?;
    Ok((aux_u, dec))
}
