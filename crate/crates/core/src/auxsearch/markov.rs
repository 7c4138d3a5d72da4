use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{LinH, Model, Schedule};
use super::{best_of, Result, SearchConfig, SearchError, SearchResult};
use crate::probkit::{compose, total_variation, Factor, JointPmf, Kernel, Pmf};
use crate::regions::{simplex_grid, Weights};
use crate::seed;

/// Weight of the quadratic Markov-constraint penalty at the end of a run.
pub const MARKOV_PENALTY: f64 = 1e3;
/// Largest accepted L1 mismatch between the induced and the given joint.
pub const MARKOV_RESIDUAL: f64 = 1e-6;

/// `X - U - Y` through `enc = p(u|x)` and `dec = p(y|u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovPoint {
    pub enc: Kernel,
    pub dec: Kernel,
    /// L1 distance between `p(x) (enc.dec)(y|x)` and the given joint.
    pub residual: f64,
}

/// Maximizing input law of the resource expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcePoint {
    pub input_pmf: Vec<f64>,
    /// `I(X~;Y~)` at `input_pmf`.
    pub information: f64,
    /// Minimizing decomposition at `input_pmf`; absent for zero weights.
    pub markov: Option<MarkovPoint>,
    /// Number of objective evaluations of the outer search.
    pub evaluations: usize,
}

fn split_joint(j: &JointPmf) -> Result<(Pmf, Kernel, [String; 2])> {
    let names = j.axis_names();
    if names.len() != 2 {
        return Err(SearchError::Config(format!(
            "expected a two-variable joint, got axes {names:?}"
        )));
    }
    let px = Pmf::new(j.marginalize(&[names[0]])?.table().to_vec())?;
    let (nx, ny) = (j.axes()[0].size, j.axes()[1].size);
    let t = j.table();
    let k = Kernel::from_fn(nx, ny, |x, y| {
        if px.probs()[x] > 0.0 {
            t[x * ny + y] / px.probs()[x]
        } else {
            1.0 / ny as f64
        }
    })?;
    Ok((px, k, [names[0].to_string(), names[1].to_string()]))
}

/// `beta I(U;XY) + gamma I(U;X) + theta I(U;Y)` at `point`, and the
/// mismatch of the induced `(X, Y)` law.
pub fn markov_value(joint_xy: &JointPmf, point: &MarkovPoint, w: &Weights) -> Result<(f64, f64)> {
    let (px, _, _) = split_joint(joint_xy)?;
    let (nu, ny) = (point.enc.n_out(), point.dec.n_out());
    let j = compose(
        "X",
        &px,
        &[
            Factor::new(&point.enc, &["X"], &[("U", nu)]),
            Factor::new(&point.dec, &["U"], &[("Y", ny)]),
        ],
    )?;
    let mi = |b: &[&str]| j.mutual_information(&["U"], b, &[]);
    let value = w.beta * mi(&["X", "Y"])? + w.gamma * mi(&["X"])? + w.theta * mi(&["Y"])?;
    let induced = j.marginalize(&["X", "Y"])?.rename(&joint_xy.axis_names())?;
    Ok((value, total_variation(&induced, joint_xy)?))
}

fn copy_x(pyx: &Kernel, cu: usize) -> Result<(Kernel, Kernel)> {
    let (nx, ny) = (pyx.n_in(), pyx.n_out());
    let enc = Kernel::deterministic(nx, cu, |x| x)?;
    let dec = Kernel::from_fn(cu, ny, |u, y| if u < nx { pyx.get(u, y) } else { 1.0 / ny as f64 })?;
    Ok((enc, dec))
}

/// Row-normalized weights; an all-zero row becomes uniform.
fn weights_or_uniform(n_in: usize, n_out: usize, f: impl Fn(usize, usize) -> f64) -> Result<Kernel> {
    let zero: Vec<bool> = (0..n_in).map(|i| (0..n_out).all(|j| f(i, j) <= 0.0)).collect();
    Ok(Kernel::from_weights(n_in, n_out, |i, j| if zero[i] { 1.0 } else { f(i, j) })?)
}

/// Exact decomposition `U = 0` with probability `lambda`, carrying the
/// product of the marginals, and otherwise a copy of `X` (or `Y`) carrying
/// the remainder. `lambda` is `frac` times the largest feasible value.
fn product_copy(px: &Pmf, pyx: &Kernel, frac: f64, copy_x: bool, cu: usize) -> Result<(Kernel, Kernel)> {
    let (nx, ny) = (pyx.n_in(), pyx.n_out());
    let q = px.probs();
    let r = pyx.push(px)?;
    let r = r.probs();
    let joint = |x: usize, y: usize| q[x] * pyx.get(x, y);
    let mut lam: f64 = 1.0;
    for x in 0..nx {
        for y in 0..ny {
            if q[x] * r[y] > 0.0 {
                lam = lam.min(joint(x, y) / (q[x] * r[y]));
            }
        }
    }
    let lam = frac * lam.clamp(0.0, 1.0);
    let rest = |x: usize, y: usize| (joint(x, y) - lam * q[x] * r[y]).max(0.0);
    if copy_x {
        let enc = Kernel::from_fn(nx, cu, |x, u| match u {
            0 => lam,
            u if u == x + 1 => 1.0 - lam,
            _ => 0.0,
        })?;
        let dec = weights_or_uniform(cu, ny, |u, y| match u {
            0 => r[y],
            u if u <= nx => rest(u - 1, y),
            _ => 1.0,
        })?;
        Ok((enc, dec))
    } else {
        let enc = weights_or_uniform(nx, cu, |x, u| match u {
            0 => lam * q[x],
            u if u <= ny => rest(x, u - 1),
            _ => 0.0,
        })?;
        let dec = Kernel::from_fn(cu, ny, |u, y| match u {
            0 => r[y],
            u if u == y + 1 => 1.0,
            u if u > ny => 1.0 / ny as f64,
            _ => 0.0,
        })?;
        Ok((enc, dec))
    }
}

fn copy_y(pyx: &Kernel, cu: usize) -> Result<(Kernel, Kernel)> {
    let ny = pyx.n_out();
    let enc = Kernel::from_fn(pyx.n_in(), cu, |x, u| if u < ny { pyx.get(x, u) } else { 0.0 })?;
    let dec = Kernel::from_fn(cu, ny, |u, y| if u % ny == y { 1.0 } else { 0.0 })?;
    Ok((enc, dec))
}

/// `min over X - U - Y` of `beta I(U;XY) + gamma I(U;X) + theta I(U;Y)`
/// for the given two-variable joint, with `|U| = card_u` (default
/// `|X| |Y|`). The copies `U = X` and `U = Y` are always candidates.
pub fn min_markov_functional(
    joint_xy: &JointPmf,
    weights: &Weights,
    cfg: &SearchConfig,
) -> Result<SearchResult<MarkovPoint>> {
    cfg.validate()?;
    weights.validate()?;
    let (px, pyx, _) = split_joint(joint_xy)?;
    let (nx, ny) = (pyx.n_in(), pyx.n_out());
    let cu = cfg.card_u.unwrap_or(nx * ny);
    let mut seeds = Vec::new();
    if cu >= nx {
        seeds.push(copy_x(&pyx, cu)?);
    }
    if cu >= ny {
        seeds.push(copy_y(&pyx, cu)?);
    }
    for frac in [1.0, 0.75, 0.5, 0.25] {
        if cu > nx {
            seeds.push(product_copy(&px, &pyx, frac, true, cu)?);
        }
        if cu > ny {
            seeds.push(product_copy(&px, &pyx, frac, false, cu)?);
        }
    }
    let random = if weights.is_zero() { 0 } else { cfg.restarts };
    let n_seeds = seeds.len();
    let finish = |enc: Kernel, dec: Kernel| -> Option<(f64, MarkovPoint)> {
        let mut p = MarkovPoint { enc, dec, residual: 0.0 };
        let (v, r) = markov_value(joint_xy, &p, weights).ok()?;
        p.residual = r;
        (r <= MARKOV_RESIDUAL).then_some((-v, p))
    };
    let found = best_of(cfg, n_seeds + random, |i, rng| {
        if i < n_seeds {
            let (e, d) = seeds[i].clone();
            return finish(e, d);
        }
        let mut m = Model::new(&[("X", nx), ("U", cu), ("Y", ny)]);
        m.fixed(&[], &["X"], px.probs().to_vec());
        let a = m.free(&["X"], &["U"], vec![1.0 / cu as f64; nx * cu]);
        let b = m.free(&["U"], &["Y"], vec![1.0 / ny as f64; cu * ny]);
        let mut terms = m.info(-weights.beta, &["U"], &["X", "Y"], &[]);
        terms.extend(m.info(-weights.gamma, &["U"], &["X"], &[]));
        terms.extend(m.info(-weights.theta, &["U"], &["Y"], &[]));
        m.add_slack(LinH { constant: 0.0, terms });
        m.add_target(&["X", "Y"], joint_xy.table().to_vec());
        m.randomize(rng, 2.0);
        m.ascend(&Schedule {
            iters: cfg.max_iters,
            step: cfg.step.initial,
            decay: cfg.step.decay,
            tol: cfg.tol,
            lambda: (1.0, MARKOV_PENALTY),
            tau: (1.0, 1.0),
        });
        if !m.repair(b) && !m.repair(a) {
            return None;
        }
        finish(
            Kernel::from_flat(nx, cu, m.table(a).to_vec()).ok()?,
            Kernel::from_flat(cu, ny, m.table(b).to_vec()).ok()?,
        )
    });
    let Some((best_restart, v, point, trace)) = found else {
        // only possible when |U| is below both |X| and |Y|
        let (enc, dec) = (
            Kernel::constant(nx, &Pmf::point(cu, 0)?),
            Kernel::constant(cu, &Pmf::uniform(ny)?),
        );
        let mut point = MarkovPoint { enc, dec, residual: 0.0 };
        let (value, residual) = markov_value(joint_xy, &point, weights)?;
        point.residual = residual;
        return Ok(SearchResult {
            best_value: value,
            converged: residual <= MARKOV_RESIDUAL,
            best_point: point,
            trace: vec![f64::NAN; n_seeds + random],
            best_restart: 0,
        });
    };
    Ok(SearchResult {
        best_value: -v,
        best_point: point,
        trace: trace.into_iter().map(|t| -t).collect(),
        converged: true,
        best_restart,
    })
}

/// Grid resolution of the input-simplex warm start for `n` symbols.
pub(crate) fn default_resolution(n: usize) -> usize {
    match n {
        0 | 1 => 1,
        2 => 16,
        3 => 8,
        4 => 5,
        _ => 3,
    }
}

/// Maximizes `f` over the probability simplex on `n` symbols: evaluates a
/// grid of the given resolution, then refines the `starts` best grid
/// points by pairwise mass transfers with halving steps.
pub(crate) fn simplex_ascent(
    n: usize,
    resolution: usize,
    starts: usize,
    min_step: f64,
    f: impl Fn(&[f64]) -> f64 + Sync,
) -> (Vec<f64>, f64, usize) {
    let grid = simplex_grid(n, resolution.max(1));
    let vals: Vec<f64> = grid.par_iter().map(|p| f(p)).collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    order.truncate(starts.max(1));
    let refined: Vec<(Vec<f64>, f64, usize)> = order
        .par_iter()
        .map(|&g| {
            let (mut p, mut v) = (grid[g].clone(), vals[g]);
            let mut step = 0.5 / resolution.max(1) as f64;
            let mut evals = 0;
            while step >= min_step && n > 1 {
                let mut best: Option<(Vec<f64>, f64)> = None;
                for i in 0..n {
                    for j in 0..n {
                        let d = step.min(p[j]);
                        if i == j || d <= 0.0 {
                            continue;
                        }
                        let mut q = p.clone();
                        q[i] += d;
                        q[j] -= d;
                        let fq = f(&q);
                        evals += 1;
                        if fq > best.as_ref().map_or(v, |b| b.1) {
                            best = Some((q, fq));
                        }
                    }
                }
                match best {
                    Some((q, fq)) => {
                        p = q;
                        v = fq;
                    }
                    None => step /= 2.0,
                }
            }
            (p, v, evals)
        })
        .collect();
    let evals = grid.len() + refined.iter().map(|r| r.2).sum::<usize>();
    let mut best = refined[0].clone();
    for r in &refined[1..] {
        if r.1 > best.1 {
            best = r.clone();
        }
    }
    (best.0, best.1, evals)
}

/// `max over p(x~)` of `I(X~;Y~) + min over X~ - U~ - Y~` of the weighted
/// functional, with `|U~|` defaulting to `|X~| |Y~|`.
pub fn max_resource_expression(
    resource: &Kernel,
    weights: &Weights,
    cfg: &SearchConfig,
) -> Result<SearchResult<ResourcePoint>> {
    cfg.validate()?;
    weights.validate()?;
    let n = resource.n_in();
    let inner = SearchConfig {
        restarts: cfg.restarts.div_ceil(4),
        max_iters: cfg.max_iters / 2,
        ..cfg.with_seed(seed::component(cfg.seed, "markov"))
    };
    let joint = |p: &[f64]| -> Result<JointPmf> {
        Ok(JointPmf::from_channel("X~", &Pmf::new(p.to_vec())?, "Y~", resource)?)
    };
    let eval = |p: &[f64], c: &SearchConfig| -> Result<(f64, f64, Option<MarkovPoint>)> {
        let j = joint(p)?;
        let info = j.mutual_information(&["X~"], &["Y~"], &[])?;
        if weights.is_zero() {
            return Ok((info, info, None));
        }
        let m = min_markov_functional(&j, weights, c)?;
        Ok((info + m.best_value, info, Some(m.best_point)))
    };
    let (p, _, evaluations) = simplex_ascent(n, default_resolution(n), cfg.restarts.min(4), 1e-4, |p| {
        eval(p, &inner).map_or(f64::NEG_INFINITY, |e| e.0)
    });
    let (value, information, markov) = eval(&p, cfg)?;
    let converged = markov.as_ref().is_none_or(|m| m.residual <= MARKOV_RESIDUAL);
    Ok(SearchResult {
        best_value: value,
        best_point: ResourcePoint {
            input_pmf: p,
            information,
            markov,
            evaluations,
        },
        trace: vec![value],
        converged,
        best_restart: 0,
    })
}
