use std::collections::{BTreeMap, HashSet};

use num::{BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::implied::ImplicationChecker;
use super::{EntropyError, EntropyExpr, IneqSystem, NormIneq, Result, VarSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FmOptions {
    /// Add `r >= 0` for every eliminated rate before eliminating.
    pub nonneg: bool,
    /// Drop inequalities certified as implied by the remaining ones.
    pub prune: bool,
}

/// Fourier–Motzkin elimination of `eliminate` (in the given order).
///
/// Strictness: a combination is strict when either parent is strict.
pub fn fm_eliminate(sys: &IneqSystem, eliminate: &[&str], opts: FmOptions) -> Result<IneqSystem> {
    for v in eliminate {
        if !sys.rate_vars.iter().any(|r| r == v) {
            return Err(EntropyError::NotARate(v.to_string()));
        }
    }
    let mut current: Vec<NormIneq> = sys.normalized();
    if opts.nonneg {
        for v in eliminate {
            let mut rates = BTreeMap::new();
            rates.insert(v.to_string(), BigRational::one());
            current.push(NormIneq::new(rates, EntropyExpr::zero(), false));
        }
    }
    current = tidy(current);
    for v in eliminate {
        current = tidy(eliminate_one(&current, v));
    }
    if opts.prune {
        current = prune(current, &sys.equalities)?;
    }
    let rate_vars = sys
        .rate_vars
        .iter()
        .filter(|r| !eliminate.contains(&r.as_str()))
        .cloned()
        .collect();
    IneqSystem::new(
        rate_vars,
        current.iter().map(NormIneq::to_lin).collect(),
        sys.equalities.clone(),
    )
}

fn eliminate_one(sys: &[NormIneq], v: &str) -> Vec<NormIneq> {
    let coeff = |n: &NormIneq| n.rates.get(v).cloned().unwrap_or_else(BigRational::zero);
    let mut out: Vec<NormIneq> = sys.iter().filter(|n| coeff(n).is_zero()).cloned().collect();
    let lower: Vec<&NormIneq> = sys.iter().filter(|n| coeff(n).is_positive()).collect();
    let upper: Vec<&NormIneq> = sys.iter().filter(|n| coeff(n).is_negative()).collect();
    for p in &lower {
        for q in &upper {
            let ap = coeff(p);
            let aq = -coeff(q);
            let mut rates: BTreeMap<String, BigRational> = BTreeMap::new();
            for (r, c) in p.rates.iter() {
                *rates.entry(r.clone()).or_insert_with(BigRational::zero) += c * &aq;
            }
            for (r, c) in q.rates.iter() {
                *rates.entry(r.clone()).or_insert_with(BigRational::zero) += c * &ap;
            }
            rates.remove(v);
            let expr = &p.expr.scaled(&aq) + &q.expr.scaled(&ap);
            out.push(NormIneq::new(rates, expr, p.strict || q.strict));
        }
    }
    out
}

/// Removes duplicates, satisfied constant comparisons, and weak copies of
/// strict inequalities.
fn tidy(sys: Vec<NormIneq>) -> Vec<NormIneq> {
    let strict_keys: HashSet<(Vec<(String, BigRational)>, EntropyExpr)> = sys
        .iter()
        .filter(|n| n.strict)
        .map(|n| (n.rates.clone().into_iter().collect(), n.expr.clone()))
        .collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for n in sys {
        if n.is_trivial() && n.trivially_true() {
            continue;
        }
        if !n.strict
            && strict_keys.contains(&(n.rates.clone().into_iter().collect(), n.expr.clone()))
        {
            continue;
        }
        if seen.insert(n.clone()) {
            out.push(n);
        }
    }
    out
}

fn prune(sys: Vec<NormIneq>, equalities: &[EntropyExpr]) -> Result<Vec<NormIneq>> {
    let vars: VarSet = sys.iter().flat_map(|n| n.expr.variables()).collect();
    let rates: Vec<String> = sys
        .iter()
        .flat_map(|n| n.rates.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut kept = sys;
    let mut i = 0;
    while i < kept.len() {
        let others: Vec<NormIneq> = kept
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, n)| n.clone())
            .collect();
        let checker = ImplicationChecker::new(&others, equalities, &vars, &rates)?;
        if checker.implies(&kept[i])?.is_some() {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(kept)
}
