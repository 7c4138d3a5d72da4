//! Certified implication between linear entropic inequalities.
//!
//! A target `q` is implied by a system when
//! `q = sum lambda_i s_i + sum mu_j e_j + sum nu_k eq_k + c` with
//! `lambda, mu, c >= 0`, where `e_j` ranges over the elemental Shannon
//! inequalities (`H(X_i | rest) >= 0`, `I(X_i;X_j|K) >= 0`) on the variables
//! involved and `eq_k` over the supplied equalities. A strict target needs
//! positive weight on some strict `s_i`. Multipliers are found by an f64 LP
//! and then re-derived exactly in rationals on the LP support, so an accepted
//! certificate is exact.

use std::collections::BTreeMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use num::{BigRational, Signed, Zero};
use serde::Serialize;

use super::expr::{fmt_rational, to_f64};
use super::{EntropyError, EntropyExpr, NormIneq, Result, VarSet};

/// Largest variable count for which the elemental inequalities are generated.
pub const MAX_SHANNON_VARS: usize = 12;
const SUPPORT_TOL: f64 = 1e-9;
// Box on every multiplier so the strict-weight maximization stays bounded.
const WEIGHT_CAP: f64 = 1e4;
const MAX_ROUNDS: usize = 200;
const CUTS_PER_ROUND: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    /// `(index into the system, weight)`.
    pub system_terms: Vec<(usize, String)>,
    /// Elemental inequalities used, with weights.
    pub shannon_terms: Vec<(String, String)>,
    /// `(index into the equalities, weight)`.
    pub equality_terms: Vec<(usize, String)>,
    pub constant_slack: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Justification {
    /// The target appears verbatim (up to positive scaling).
    Syntactic(usize),
    /// The target differs from system inequality `index` by a combination of
    /// the supplied equalities.
    Equalities(usize),
    Shannon(Certificate),
}

type Sparse = BTreeMap<usize, BigRational>;

#[derive(Clone, Copy, Debug)]
enum ColKind {
    System(usize),
    Elemental(usize),
    Equality(usize),
    Constant,
}

pub struct ImplicationChecker {
    system: Vec<NormIneq>,
    equalities: Vec<EntropyExpr>,
    vars: Vec<String>,
    rates: Vec<String>,
    columns: Vec<(ColKind, Sparse)>,
    elemental_names: Vec<String>,
    shannon: bool,
}

impl ImplicationChecker {
    /// `extra_vars` and `extra_rates` reserve coordinates for targets that
    /// mention labels absent from the system.
    pub fn new(
        system: &[NormIneq],
        equalities: &[EntropyExpr],
        extra_vars: &VarSet,
        extra_rates: &[String],
    ) -> Result<Self> {
        let mut var_set: VarSet = extra_vars.clone();
        for s in system {
            var_set.extend(s.expr.variables());
        }
        for e in equalities {
            var_set.extend(e.variables());
        }
        if var_set.len() > 20 {
            return Err(EntropyError::TooManyVariables(var_set.len()));
        }
        let vars: Vec<String> = var_set.into_iter().collect();
        let mut rate_set: Vec<String> = extra_rates.to_vec();
        for s in system {
            for r in s.rates.keys() {
                if !rate_set.contains(r) {
                    rate_set.push(r.clone());
                }
            }
        }
        rate_set.sort();
        let mut me = Self {
            system: system.to_vec(),
            equalities: equalities.to_vec(),
            vars,
            rates: rate_set,
            columns: Vec::new(),
            elemental_names: Vec::new(),
            shannon: false,
        };
        let mut columns = Vec::new();
        for (i, s) in system.iter().enumerate() {
            columns.push((ColKind::System(i), me.encode(&s.rates, &s.expr)?));
        }
        for (i, e) in equalities.iter().enumerate() {
            columns.push((ColKind::Equality(i), me.encode(&BTreeMap::new(), e)?));
        }
        let n = me.vars.len();
        if n <= MAX_SHANNON_VARS {
            me.shannon = true;
            let (cols, names) = me.elementals();
            for (k, c) in cols.into_iter().enumerate() {
                columns.push((ColKind::Elemental(k), c));
            }
            me.elemental_names = names;
        }
        let mut unit = Sparse::new();
        unit.insert(me.const_row(), BigRational::from_integer(1.into()));
        columns.push((ColKind::Constant, unit));
        me.columns = columns;
        Ok(me)
    }

    fn n_rows(&self) -> usize {
        self.rates.len() + (1usize << self.vars.len()) + 1
    }

    fn const_row(&self) -> usize {
        self.n_rows() - 1
    }

    fn atom_row(&self, mask: usize) -> usize {
        // masks start at 1; row for mask m is rates.len() + m - 1
        self.rates.len() + mask - 1
    }

    fn mask(&self, s: &VarSet) -> Result<usize> {
        let mut m = 0;
        for v in s {
            let i = self
                .vars
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| EntropyError::UnknownVariable(v.clone()))?;
            m |= 1 << i;
        }
        Ok(m)
    }

    fn encode(&self, rates: &BTreeMap<String, BigRational>, e: &EntropyExpr) -> Result<Sparse> {
        let mut out = Sparse::new();
        for (r, c) in rates {
            let i = self
                .rates
                .iter()
                .position(|x| x == r)
                .ok_or_else(|| EntropyError::UnknownRate(r.clone()))?;
            out.insert(i, c.clone());
        }
        for (s, c) in e.coeffs() {
            out.insert(self.atom_row(self.mask(s)?), c.clone());
        }
        if !e.constant_term().is_zero() {
            out.insert(self.const_row(), e.constant_term().clone());
        }
        Ok(out)
    }

    fn elementals(&self) -> (Vec<Sparse>, Vec<String>) {
        let n = self.vars.len();
        let full = (1usize << n) - 1;
        let one = || BigRational::from_integer(1.into());
        let mut cols = Vec::new();
        let mut names = Vec::new();
        let label = |m: usize| -> String {
            (0..n)
                .filter(|i| m >> i & 1 == 1)
                .map(|i| self.vars[i].as_str())
                .collect()
        };
        for i in 0..n {
            let rest = full & !(1 << i);
            let mut c = Sparse::new();
            c.insert(self.atom_row(full), one());
            if rest != 0 {
                c.insert(self.atom_row(rest), -one());
            }
            cols.push(c);
            names.push(format!("H({}|{})", self.vars[i], label(rest)));
        }
        for i in 0..n {
            for j in i + 1..n {
                let others = full & !(1 << i) & !(1 << j);
                // iterate every subset K of `others`
                let mut k = others;
                loop {
                    let mut c = Sparse::new();
                    let add = |m: usize, v: BigRational, c: &mut Sparse| {
                        if m == 0 {
                            return;
                        }
                        let row = self.atom_row(m);
                        let e = c.entry(row).or_insert_with(BigRational::zero);
                        *e += v;
                        if e.is_zero() {
                            c.remove(&row);
                        }
                    };
                    add(k | 1 << i, one(), &mut c);
                    add(k | 1 << j, one(), &mut c);
                    add(k | 1 << i | 1 << j, -one(), &mut c);
                    add(k, -one(), &mut c);
                    cols.push(c);
                    names.push(if k == 0 {
                        format!("I({};{})", self.vars[i], self.vars[j])
                    } else {
                        format!("I({};{}|{})", self.vars[i], self.vars[j], label(k))
                    });
                    if k == 0 {
                        break;
                    }
                    k = (k - 1) & others;
                }
            }
        }
        (cols, names)
    }

    pub fn system(&self) -> &[NormIneq] {
        &self.system
    }

    /// Whether `q` follows from the system, with a justification if so.
    pub fn implies(&self, q: &NormIneq) -> Result<Option<Justification>> {
        if q.is_trivial() && q.trivially_true() {
            return Ok(Some(Justification::Syntactic(usize::MAX)));
        }
        for (i, s) in self.system.iter().enumerate() {
            if s.rates == q.rates && s.expr == q.expr && (s.strict || !q.strict) {
                return Ok(Some(Justification::Syntactic(i)));
            }
        }
        let target = self.encode(&q.rates, &q.expr)?;
        if !self.equalities.is_empty() && !q.rates.is_empty() {
            let eq_cols: Vec<Sparse> = self
                .columns
                .iter()
                .filter(|(k, _)| matches!(k, ColKind::Equality(_)))
                .map(|(_, c)| c.clone())
                .collect();
            for (i, s) in self.system.iter().enumerate() {
                if s.rates != q.rates || (q.strict && !s.strict) {
                    continue;
                }
                let mut d = target.clone();
                for (row, v) in &self.columns[i].1 {
                    let e = d.entry(*row).or_insert_with(BigRational::zero);
                    *e -= v;
                    if e.is_zero() {
                        d.remove(row);
                    }
                }
                if solve_exact(&eq_cols, &d).is_some() {
                    return Ok(Some(Justification::Equalities(i)));
                }
            }
        }
        if !self.shannon {
            return Ok(None);
        }
        Ok(self.lp_certificate(q, &target).map(Justification::Shannon))
    }

    fn lp_certificate(&self, q: &NormIneq, target: &Sparse) -> Option<Certificate> {
        if q.strict && !self.system.iter().any(|s| s.strict) {
            return None;
        }
        let base: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, (k, _))| !matches!(k, ColKind::Elemental(_)))
            .map(|(i, _)| i)
            .collect();
        let cuts = self.separate(q, target)?;
        let mut cols = base;
        cols.extend(cuts);
        cols.sort_unstable();
        if let Some(c) = self.primal(q, target, &cols) {
            return Some(c);
        }
        let all: Vec<usize> = (0..self.columns.len()).collect();
        self.primal(q, target, &all)
    }

    /// Cutting planes on the dual: looks for a point satisfying the system,
    /// the equalities and the elemental inequalities found so far that
    /// violates `q`. Returns the elemental columns needed to rule such points
    /// out, or `None` when a violating polymatroid exists.
    fn separate(&self, q: &NormIneq, target: &Sparse) -> Option<Vec<usize>> {
        let elementals: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, (k, _))| matches!(k, ColKind::Elemental(_)))
            .map(|(i, _)| i)
            .collect();
        let mut active: Vec<usize> = Vec::new();
        let mut in_active = vec![false; self.columns.len()];
        let dot =
            |col: &Sparse, x: &[f64]| -> f64 { col.iter().map(|(r, c)| to_f64(c) * x[*r]).sum() };
        let f64col = |col: &Sparse, xs: &[microlp::Variable]| -> Vec<(microlp::Variable, f64)> {
            col.iter().map(|(r, c)| (xs[*r], to_f64(c))).collect()
        };
        for _ in 0..MAX_ROUNDS {
            let dir = if q.strict {
                OptimizationDirection::Maximize
            } else {
                OptimizationDirection::Minimize
            };
            let mut p = Problem::new(dir);
            let n = self.n_rows();
            let xs: Vec<microlp::Variable> = (0..n)
                .map(|r| {
                    let obj = if q.strict {
                        0.0
                    } else {
                        target.get(&r).map(to_f64).unwrap_or(0.0)
                    };
                    let lo = if r == self.const_row() { 0.0 } else { -1.0 };
                    p.add_var(obj, (lo, 1.0))
                })
                .collect();
            let tau = q.strict.then(|| p.add_var(1.0, (0.0, 1.0)));
            if q.strict {
                p.add_constraint(f64col(target, &xs).as_slice(), ComparisonOp::Le, 0.0);
            }
            for (kind, col) in &self.columns {
                match kind {
                    ColKind::System(i) => {
                        let mut e = f64col(col, &xs);
                        if let (Some(tau), true) = (tau, self.system[*i].strict) {
                            e.push((tau, -1.0));
                        }
                        p.add_constraint(e.as_slice(), ComparisonOp::Ge, 0.0);
                    }
                    ColKind::Equality(_) => {
                        p.add_constraint(f64col(col, &xs).as_slice(), ComparisonOp::Eq, 0.0)
                    }
                    _ => {}
                }
            }
            for &i in &active {
                p.add_constraint(
                    f64col(&self.columns[i].1, &xs).as_slice(),
                    ComparisonOp::Ge,
                    0.0,
                );
            }
            let sol = p.solve().ok()?.into_solution().ok()?;
            let refuted = if q.strict {
                sol.objective() > SUPPORT_TOL
            } else {
                sol.objective() < -SUPPORT_TOL
            };
            if !refuted {
                return Some(active);
            }
            let x: Vec<f64> = xs.iter().map(|&v| sol.var_value(v)).collect();
            let mut violated: Vec<(f64, usize)> = elementals
                .iter()
                .filter(|&&i| !in_active[i])
                .map(|&i| (dot(&self.columns[i].1, &x), i))
                .filter(|(v, _)| *v < -SUPPORT_TOL)
                .collect();
            if violated.is_empty() {
                return None;
            }
            violated.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, i) in violated.iter().take(CUTS_PER_ROUND) {
                in_active[i] = true;
                active.push(i);
            }
        }
        None
    }

    /// Primal LP over the columns `cols`, followed by exact verification.
    fn primal(&self, q: &NormIneq, target: &Sparse, cols: &[usize]) -> Option<Certificate> {
        let dir = if q.strict {
            OptimizationDirection::Maximize
        } else {
            OptimizationDirection::Minimize
        };
        let mut p = Problem::new(dir);
        let strict_sys = |k: &ColKind| matches!(k, ColKind::System(i) if self.system[*i].strict);
        let mut vars = Vec::with_capacity(cols.len());
        for &i in cols {
            let kind = &self.columns[i].0;
            let obj = if q.strict {
                if strict_sys(kind) {
                    1.0
                } else {
                    0.0
                }
            } else if matches!(kind, ColKind::Equality(_)) {
                0.0
            } else {
                1.0
            };
            let bounds = if matches!(kind, ColKind::Equality(_)) {
                (-WEIGHT_CAP, WEIGHT_CAP)
            } else {
                (0.0, WEIGHT_CAP)
            };
            vars.push(p.add_var(obj, bounds));
        }
        let mut rows: BTreeMap<usize, Vec<(microlp::Variable, f64)>> =
            target.keys().map(|&r| (r, Vec::new())).collect();
        for (&i, &v) in cols.iter().zip(&vars) {
            for (r, c) in &self.columns[i].1 {
                rows.entry(*r).or_default().push((v, to_f64(c)));
            }
        }
        for (r, terms) in &rows {
            let rhs = target.get(r).map(to_f64).unwrap_or(0.0);
            p.add_constraint(terms.as_slice(), ComparisonOp::Eq, rhs);
        }
        let sol = p.solve().ok()?.into_solution().ok()?;
        if q.strict && sol.objective() <= SUPPORT_TOL {
            return None;
        }
        let support: Vec<usize> = cols
            .iter()
            .zip(&vars)
            .filter(|(_, &v)| sol.var_value(v).abs() > SUPPORT_TOL)
            .map(|(&i, _)| i)
            .collect();
        self.verify(q, target, &support)
    }

    /// Re-solves on the support in exact arithmetic and checks signs.
    fn verify(&self, q: &NormIneq, target: &Sparse, support: &[usize]) -> Option<Certificate> {
        let cols: Vec<Sparse> = support.iter().map(|&i| self.columns[i].1.clone()).collect();
        let x = solve_exact(&cols, target)?;
        let mut cert = Certificate {
            system_terms: Vec::new(),
            shannon_terms: Vec::new(),
            equality_terms: Vec::new(),
            constant_slack: "0".into(),
        };
        let mut strict_weight = BigRational::zero();
        for (&i, w) in support.iter().zip(&x) {
            if w.is_zero() {
                continue;
            }
            let kind = self.columns[i].0;
            if !matches!(kind, ColKind::Equality(_)) && w.is_negative() {
                return None;
            }
            match kind {
                ColKind::System(k) => {
                    if self.system[k].strict {
                        strict_weight += w;
                    }
                    cert.system_terms.push((k, fmt_rational(w)));
                }
                ColKind::Elemental(k) => cert
                    .shannon_terms
                    .push((self.elemental_names[k].clone(), fmt_rational(w))),
                ColKind::Equality(k) => cert.equality_terms.push((k, fmt_rational(w))),
                ColKind::Constant => cert.constant_slack = fmt_rational(w),
            }
        }
        if q.strict && !strict_weight.is_positive() {
            return None;
        }
        Some(cert)
    }
}

/// Finds some `x` with `sum_j x_j cols_j = target` exactly, or `None`.
pub(crate) fn solve_exact(cols: &[Sparse], target: &Sparse) -> Option<Vec<BigRational>> {
    let mut row_ids: Vec<usize> = target.keys().copied().collect();
    for c in cols {
        row_ids.extend(c.keys().copied());
    }
    row_ids.sort_unstable();
    row_ids.dedup();
    let m = row_ids.len();
    let n = cols.len();
    let pos = |r: usize| row_ids.binary_search(&r).expect("row present");
    // augmented dense matrix m x (n + 1)
    let mut a = vec![vec![BigRational::zero(); n + 1]; m];
    for (j, c) in cols.iter().enumerate() {
        for (r, v) in c {
            a[pos(*r)][j] = v.clone();
        }
    }
    for (r, v) in target {
        a[pos(*r)][n] = v.clone();
    }
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..m).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = BigRational::from_integer(1.into()) / &a[row][col];
        for k in col..=n {
            a[row][k] = &a[row][k] * &inv;
        }
        for i in 0..m {
            if i != row && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for k in col..=n {
                    let d = &f * &a[row][k];
                    a[i][k] -= d;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m {
            break;
        }
    }
    if a[row..].iter().any(|r| !r[n].is_zero()) {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = a[i][n].clone();
    }
    Some(x)
}
