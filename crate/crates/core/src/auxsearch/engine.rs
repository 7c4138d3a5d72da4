//! Differentiable joint laws built from kernel factors.
//!
//! A [`Model`] is a product of row-stochastic factors over named axes. Free
//! factors are parameterized by per-row softmax logits. The objective is a
//! soft minimum of affine combinations of entropies, minus a quadratic
//! penalty on marginal mismatches; its gradient is exact.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;

/// Logits are clamped to this magnitude so free entries never underflow.
const LOGIT_CAP: f64 = 30.0;
/// Weight of marginal violations in the repair program.
const REPAIR_VIOLATION_WEIGHT: f64 = 1e4;
/// Target mismatch (L1) accepted as an exact match after repair.
const REPAIR_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
struct Factor {
    n_in: usize,
    n_out: usize,
    table: Vec<f64>,
    logits: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
struct Subset {
    size: usize,
    idx: Vec<u32>,
}

/// `constant + sum coef * H(subset)`.
#[derive(Clone, Debug, Default)]
pub(crate) struct LinH {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
struct Target {
    subset: usize,
    table: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Model {
    names: Vec<String>,
    sizes: Vec<usize>,
    n_cells: usize,
    factors: Vec<Factor>,
    /// Per factor, the table entry used by each cell.
    fidx: Vec<Vec<u32>>,
    subsets: Vec<(Vec<usize>, Subset)>,
    targets: Vec<Target>,
    slacks: Vec<LinH>,
}

/// Result of one objective evaluation.
#[derive(Clone, Debug)]
pub(crate) struct Eval {
    pub value: f64,
}

impl Model {
    pub fn new(axes: &[(&str, usize)]) -> Self {
        let sizes: Vec<usize> = axes.iter().map(|a| a.1).collect();
        Self {
            names: axes.iter().map(|a| a.0.to_string()).collect(),
            n_cells: sizes.iter().product(),
            sizes,
            factors: Vec::new(),
            fidx: Vec::new(),
            subsets: Vec::new(),
            targets: Vec::new(),
            slacks: Vec::new(),
        }
    }

    fn axis(&self, name: &str) -> usize {
        self.names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown axis {name}"))
    }

    fn axes(&self, names: &[&str]) -> Vec<usize> {
        names.iter().map(|n| self.axis(n)).collect()
    }

    /// Index of each cell into the row-major table over `axes`.
    fn index_over(&self, axes: &[usize]) -> Vec<u32> {
        let mut stride = vec![0usize; self.sizes.len()];
        let mut s = 1;
        for &a in axes.iter().rev() {
            stride[a] = s;
            s *= self.sizes[a];
        }
        let mut out = Vec::with_capacity(self.n_cells);
        let mut digits = vec![0usize; self.sizes.len()];
        let mut cur = 0usize;
        for _ in 0..self.n_cells {
            out.push(cur as u32);
            for ax in (0..self.sizes.len()).rev() {
                digits[ax] += 1;
                cur += stride[ax];
                if digits[ax] < self.sizes[ax] {
                    break;
                }
                cur -= stride[ax] * self.sizes[ax];
                digits[ax] = 0;
            }
        }
        out
    }

    fn push_factor(&mut self, inputs: &[&str], outputs: &[&str], table: Vec<f64>, free: bool) -> usize {
        let inputs = self.axes(inputs);
        let outputs = self.axes(outputs);
        let n_in: usize = inputs.iter().map(|&a| self.sizes[a]).product();
        let n_out: usize = outputs.iter().map(|&a| self.sizes[a]).product();
        assert_eq!(table.len(), n_in * n_out, "factor table size");
        let all: Vec<usize> = inputs.iter().chain(&outputs).copied().collect();
        self.fidx.push(self.index_over(&all));
        let logits = free.then(|| {
            table
                .iter()
                .map(|&p| p.max(1e-13).ln().clamp(-LOGIT_CAP, LOGIT_CAP))
                .collect()
        });
        self.factors.push(Factor {
            n_in,
            n_out,
            table,
            logits,
        });
        self.factors.len() - 1
    }

    pub fn fixed(&mut self, inputs: &[&str], outputs: &[&str], table: Vec<f64>) -> usize {
        self.push_factor(inputs, outputs, table, false)
    }

    pub fn free(&mut self, inputs: &[&str], outputs: &[&str], table: Vec<f64>) -> usize {
        let id = self.push_factor(inputs, outputs, table, true);
        self.sync(id);
        id
    }

    pub fn table(&self, f: usize) -> &[f64] {
        &self.factors[f].table
    }

    pub fn dims(&self, f: usize) -> (usize, usize) {
        (self.factors[f].n_in, self.factors[f].n_out)
    }

    pub fn is_free(&self, f: usize) -> bool {
        self.factors[f].logits.is_some()
    }

    /// Replaces a factor's table; free factors get matching logits.
    pub fn set_table(&mut self, f: usize, table: Vec<f64>) {
        let fac = &mut self.factors[f];
        assert_eq!(table.len(), fac.table.len());
        if let Some(l) = fac.logits.as_mut() {
            for (l, &p) in l.iter_mut().zip(&table) {
                *l = p.max(1e-13).ln().clamp(-LOGIT_CAP, LOGIT_CAP);
            }
        }
        fac.table = table;
    }

    /// Draws logits uniformly from `[-spread, spread]` for every free factor.
    pub fn randomize(&mut self, rng: &mut impl Rng, spread: f64) {
        for f in 0..self.factors.len() {
            if let Some(l) = self.factors[f].logits.as_mut() {
                for v in l.iter_mut() {
                    *v = rng.gen_range(-spread..=spread);
                }
                self.sync(f);
            }
        }
    }

    fn sync(&mut self, f: usize) {
        let fac = &mut self.factors[f];
        let Some(logits) = fac.logits.as_ref() else {
            return;
        };
        for r in 0..fac.n_in {
            let row = &logits[r * fac.n_out..(r + 1) * fac.n_out];
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|&l| (l - m).exp()).sum();
            for (t, &l) in fac.table[r * fac.n_out..(r + 1) * fac.n_out]
                .iter_mut()
                .zip(row)
            {
                *t = (l - m).exp() / z;
            }
        }
    }

    /// Registers `H(names)` and returns its id.
    pub fn subset(&mut self, names: &[&str]) -> usize {
        let mut axes = self.axes(names);
        axes.sort_unstable();
        axes.dedup();
        if let Some(i) = self.subsets.iter().position(|(a, _)| *a == axes) {
            return i;
        }
        let idx = self.index_over(&axes);
        let size = axes.iter().map(|&a| self.sizes[a]).product();
        self.subsets.push((axes, Subset { size, idx }));
        self.subsets.len() - 1
    }

    /// `coef * I(A;B|C)` as entropy terms.
    pub fn info(&mut self, coef: f64, a: &[&str], b: &[&str], c: &[&str]) -> Vec<(usize, f64)> {
        let cat = |x: &[&str], y: &[&str]| -> Vec<String> {
            x.iter().chain(y).map(|s| s.to_string()).collect()
        };
        let ac = cat(a, c);
        let bc = cat(b, c);
        let abc: Vec<String> = cat(a, b).into_iter().chain(c.iter().map(|s| s.to_string())).collect();
        let mut out = Vec::new();
        for (set, k) in [(ac, coef), (bc, coef), (abc, -coef)] {
            out.push((self.subset(&crate::regions::strs(&set)), k));
        }
        if !c.is_empty() {
            out.push((self.subset(c), -coef));
        }
        out
    }

    pub fn add_slack(&mut self, s: LinH) {
        self.slacks.push(s);
    }

    pub fn add_target(&mut self, names: &[&str], table: Vec<f64>) {
        let subset = self.subset(names);
        assert_eq!(self.subsets[subset].1.size, table.len(), "target size");
        self.targets.push(Target { subset, table });
    }

    pub fn joint(&self) -> Vec<f64> {
        let mut p = vec![1.0; self.n_cells];
        for (f, fac) in self.factors.iter().enumerate() {
            for (c, v) in p.iter_mut().enumerate() {
                *v *= fac.table[self.fidx[f][c] as usize];
            }
        }
        p
    }

    fn marginal(&self, p: &[f64], s: usize) -> Vec<f64> {
        let sub = &self.subsets[s].1;
        let mut q = vec![0.0; sub.size];
        for (c, &v) in p.iter().enumerate() {
            q[sub.idx[c] as usize] += v;
        }
        q
    }

    /// Unhalved L1 distance of each target marginal, summed.
    pub fn target_l1(&self) -> f64 {
        let p = self.joint();
        self.targets
            .iter()
            .map(|t| {
                let m = self.marginal(&p, t.subset);
                m.iter().zip(&t.table).map(|(a, b)| (a - b).abs()).sum::<f64>()
            })
            .sum()
    }

    /// Objective `softmin_tau(slacks) - lambda * penalty`; with `grad`, also
    /// accumulates d(value)/d(logits) per free factor.
    pub fn evaluate(&self, tau: f64, lambda: f64, grad: Option<&mut Vec<Vec<f64>>>) -> Eval {
        let p = self.joint();
        let margs: Vec<Vec<f64>> = (0..self.subsets.len()).map(|s| self.marginal(&p, s)).collect();
        let h: Vec<f64> = margs
            .iter()
            .map(|q| q.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum())
            .collect();
        let slacks: Vec<f64> = self
            .slacks
            .iter()
            .map(|s| s.constant + s.terms.iter().map(|&(i, c)| c * h[i]).sum::<f64>())
            .collect();
        let smin = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        let (soft, weights) = if slacks.len() == 1 {
            (slacks[0], vec![1.0])
        } else {
            let e: Vec<f64> = slacks.iter().map(|&s| (-(s - smin) / tau).exp()).collect();
            let z: f64 = e.iter().sum();
            (smin - tau * z.ln(), e.into_iter().map(|v| v / z).collect())
        };
        let mut penalty = 0.0;
        let mut diffs = Vec::with_capacity(self.targets.len());
        for t in &self.targets {
            let d: Vec<f64> = margs[t.subset].iter().zip(&t.table).map(|(a, b)| a - b).collect();
            penalty += d.iter().map(|v| v * v).sum::<f64>();
            diffs.push(d);
        }
        let value = soft - lambda * penalty;
        if let Some(grad) = grad {
            let mut coef = vec![0.0; self.subsets.len()];
            for (s, w) in self.slacks.iter().zip(&weights) {
                for &(i, c) in &s.terms {
                    coef[i] += w * c;
                }
            }
            let mut g = vec![0.0; self.n_cells];
            for (s, &a) in coef.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let (q, idx) = (&margs[s], &self.subsets[s].1.idx);
                for (c, gv) in g.iter_mut().enumerate() {
                    let m = q[idx[c] as usize];
                    if m > 0.0 {
                        *gv -= a * m.log2();
                    }
                }
            }
            for (t, d) in self.targets.iter().zip(&diffs) {
                let idx = &self.subsets[t.subset].1.idx;
                for (c, gv) in g.iter_mut().enumerate() {
                    *gv -= 2.0 * lambda * d[idx[c] as usize];
                }
            }
            self.backprop(&g, grad);
        }
        Eval { value }
    }

    /// Chains a per-cell gradient to the logits of every free factor.
    fn backprop(&self, g: &[f64], out: &mut Vec<Vec<f64>>) {
        let nf = self.factors.len();
        out.resize(nf, Vec::new());
        let mut kgrad: Vec<Vec<f64>> = self
            .factors
            .iter()
            .map(|f| if f.logits.is_some() { vec![0.0; f.table.len()] } else { Vec::new() })
            .collect();
        let mut pre = vec![1.0; nf + 1];
        for c in 0..self.n_cells {
            if g[c] == 0.0 {
                continue;
            }
            for f in 0..nf {
                pre[f + 1] = pre[f] * self.factors[f].table[self.fidx[f][c] as usize];
            }
            let mut suf = 1.0;
            for f in (0..nf).rev() {
                if self.factors[f].logits.is_some() {
                    kgrad[f][self.fidx[f][c] as usize] += g[c] * pre[f] * suf;
                }
                suf *= self.factors[f].table[self.fidx[f][c] as usize];
            }
        }
        for (f, fac) in self.factors.iter().enumerate() {
            if fac.logits.is_none() {
                out[f].clear();
                continue;
            }
            let kg = &kgrad[f];
            let mut lg = vec![0.0; fac.table.len()];
            for r in 0..fac.n_in {
                let row = r * fac.n_out..(r + 1) * fac.n_out;
                let mean: f64 = fac.table[row.clone()].iter().zip(&kg[row.clone()]).map(|(k, g)| k * g).sum();
                for i in row {
                    lg[i] = fac.table[i] * (kg[i] - mean);
                }
            }
            out[f] = lg;
        }
    }

    /// Gradient ascent with Adam on all free logits. `lambda` and `tau`
    /// interpolate geometrically from their first to second values.
    pub fn ascend(&mut self, sched: &Schedule) -> Eval {
        let free: Vec<usize> = (0..self.factors.len()).filter(|&f| self.is_free(f)).collect();
        let mut m: Vec<Vec<f64>> = free.iter().map(|&f| vec![0.0; self.factors[f].table.len()]).collect();
        let mut v = m.clone();
        let mut grad = Vec::new();
        let (b1, b2) = (0.9f64, 0.999f64);
        let iters = sched.iters.max(1);
        let mut last = f64::NEG_INFINITY;
        let mut calm = 0;
        for t in 0..iters {
            let frac = t as f64 / iters as f64;
            let lambda = sched.lambda.0 * (sched.lambda.1 / sched.lambda.0).powf(frac);
            let tau = sched.tau.0 * (sched.tau.1 / sched.tau.0).powf(frac);
            let lr = sched.step * sched.decay.powi(t as i32);
            let e = self.evaluate(tau, lambda, Some(&mut grad));
            if frac > 0.5 {
                calm = if (e.value - last).abs() < sched.tol { calm + 1 } else { 0 };
                if calm >= 20 {
                    break;
                }
            }
            last = e.value;
            let k = (t + 1) as i32;
            for (j, &f) in free.iter().enumerate() {
                let logits = self.factors[f].logits.as_mut().expect("free factor");
                for i in 0..logits.len() {
                    let gi = grad[f][i];
                    m[j][i] = b1 * m[j][i] + (1.0 - b1) * gi;
                    v[j][i] = b2 * v[j][i] + (1.0 - b2) * gi * gi;
                    let mh = m[j][i] / (1.0 - b1.powi(k));
                    let vh = v[j][i] / (1.0 - b2.powi(k));
                    logits[i] = (logits[i] + lr * mh / (vh.sqrt() + 1e-12)).clamp(-LOGIT_CAP, LOGIT_CAP);
                }
                self.sync(f);
            }
        }
        self.evaluate(sched.tau.1, sched.lambda.1, None)
    }

    /// Moves factor `f` to the nearest table (in L1) whose induced target
    /// marginals match, holding the other factors fixed; the move is kept
    /// only if the mismatch does not grow. Returns whether the targets now
    /// match.
    pub fn repair(&mut self, f: usize) -> bool {
        let nf = self.factors.len();
        let fac = &self.factors[f];
        let (n_in, n_out) = (fac.n_in, fac.n_out);
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let k: Vec<microlp::Variable> = (0..fac.table.len()).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
        for (i, &kv) in k.iter().enumerate() {
            let d = lp.add_var(1.0, (0.0, f64::INFINITY));
            lp.add_constraint([(kv, 1.0), (d, -1.0)], ComparisonOp::Le, fac.table[i]);
            lp.add_constraint([(kv, 1.0), (d, 1.0)], ComparisonOp::Ge, fac.table[i]);
        }
        for r in 0..n_in {
            let row: Vec<_> = (0..n_out).map(|j| (k[r * n_out + j], 1.0)).collect();
            lp.add_constraint(&row[..], ComparisonOp::Eq, 1.0);
        }
        for t in &self.targets {
            let sub = &self.subsets[t.subset].1;
            let mut coef = vec![std::collections::BTreeMap::<usize, f64>::new(); sub.size];
            for c in 0..self.n_cells {
                let mut rest = 1.0;
                for g in 0..nf {
                    if g != f {
                        rest *= self.factors[g].table[self.fidx[g][c] as usize];
                    }
                }
                if rest != 0.0 {
                    *coef[sub.idx[c] as usize].entry(self.fidx[f][c] as usize).or_default() += rest;
                }
            }
            for (cell, row) in coef.iter().enumerate() {
                let up = lp.add_var(REPAIR_VIOLATION_WEIGHT, (0.0, f64::INFINITY));
                let dn = lp.add_var(REPAIR_VIOLATION_WEIGHT, (0.0, f64::INFINITY));
                let mut expr: Vec<_> = row.iter().map(|(&e, &v)| (k[e], v)).collect();
                expr.push((up, -1.0));
                expr.push((dn, 1.0));
                lp.add_constraint(&expr[..], ComparisonOp::Eq, t.table[cell]);
            }
        }
        let Some(sol) = lp.solve().ok().and_then(|s| s.into_solution().ok()) else {
            return false;
        };
        let mut table: Vec<f64> = k.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
        for r in 0..n_in {
            let row = &mut table[r * n_out..(r + 1) * n_out];
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            } else {
                row.iter_mut().for_each(|v| *v = 1.0 / n_out as f64);
            }
        }
        let (before, l1) = (self.factors[f].table.clone(), self.target_l1());
        self.set_table(f, table);
        let after = self.target_l1();
        if after > l1 {
            self.set_table(f, before);
        }
        after.min(l1) < REPAIR_TOL
    }

    /// Repairs the listed factors in turn until the targets match.
    pub fn repair_cycle(&mut self, order: &[usize], rounds: usize) -> bool {
        if self.target_l1() < REPAIR_TOL {
            return true;
        }
        for _ in 0..rounds {
            for &f in order {
                if self.repair(f) {
                    return true;
                }
            }
        }
        false
    }
}

/// Per-run optimizer schedule.
#[derive(Clone, Debug)]
pub(crate) struct Schedule {
    pub iters: usize,
    pub step: f64,
    pub decay: f64,
    pub tol: f64,
    pub lambda: (f64, f64),
    pub tau: (f64, f64),
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Finite-difference check of the analytic gradient.
    #[test]
    fn gradient_matches_finite_differences() {
        let mut m = Model::new(&[("X", 2), ("U", 3), ("Y", 2)]);
        m.fixed(&[], &["X"], vec![0.3, 0.7]);
        let a = m.free(&["X"], &["U"], vec![1.0 / 3.0; 6]);
        let b = m.free(&["U"], &["Y"], vec![0.5; 6]);
        let mut terms = m.info(1.0, &["U"], &["X", "Y"], &[]);
        terms.extend(m.info(-0.5, &["U"], &["Y"], &["X"]));
        m.add_slack(LinH { constant: 0.2, terms });
        let t2 = m.info(0.7, &["U"], &["X"], &[]);
        m.add_slack(LinH { constant: 0.0, terms: t2 });
        m.add_target(&["X", "Y"], vec![0.2, 0.1, 0.3, 0.4]);
        m.randomize(&mut ChaCha8Rng::seed_from_u64(3), 1.5);
        let mut g = Vec::new();
        m.evaluate(0.05, 10.0, Some(&mut g));
        for f in [a, b] {
            for i in 0..m.factors[f].table.len() {
                let h = 1e-6;
                let mut p = m.clone();
                p.factors[f].logits.as_mut().unwrap()[i] += h;
                p.sync(f);
                let mut q = m.clone();
                q.factors[f].logits.as_mut().unwrap()[i] -= h;
                q.sync(f);
                let fd = (p.evaluate(0.05, 10.0, None).value - q.evaluate(0.05, 10.0, None).value) / (2.0 * h);
                assert!((fd - g[f][i]).abs() < 1e-6, "factor {f} entry {i}: {fd} vs {}", g[f][i]);
            }
        }
    }

    #[test]
    fn repair_reaches_target() {
        let mut m = Model::new(&[("X", 2), ("U", 2), ("Y", 2)]);
        m.fixed(&[], &["X"], vec![0.5, 0.5]);
        m.free(&["X"], &["U"], vec![0.9, 0.1, 0.2, 0.8]);
        let b = m.free(&["U"], &["Y"], vec![0.5, 0.5, 0.5, 0.5]);
        m.add_target(&["X", "Y"], vec![0.4, 0.1, 0.1, 0.4]);
        assert!(m.repair(b));
        assert!(m.target_l1() < 1e-8);
    }
}
