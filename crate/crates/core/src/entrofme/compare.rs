use serde::{Deserialize, Serialize};

use super::implied::{ImplicationChecker, Justification};
use super::{EntropyError, EntropyExpr, IneqSystem, LinIneq, NormIneq, Result, VarSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    Equal,
    ASubsetB,
    BSubsetA,
    Incomparable,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionComparison {
    pub relation: Relation,
    /// An inequality that holds on one side but is not implied by the other.
    pub witness: Option<LinIneq>,
    /// Inequalities of `a` not implied by `b`.
    pub unmatched_a: Vec<LinIneq>,
    /// Inequalities of `b` not implied by `a`.
    pub unmatched_b: Vec<LinIneq>,
    /// How each inequality of `a` was matched against `b`.
    pub matches_a: Vec<Option<Justification>>,
    /// How each inequality of `b` was matched against `a`.
    pub matches_b: Vec<Option<Justification>>,
}

/// Compares two regions over the same rate variables.
///
/// Each inequality of one system is checked for implication by the other,
/// first verbatim, then modulo the equalities, then with an exact Shannon
/// certificate (see [`ImplicationChecker`]). Equalities stored in either
/// system are used together with `equalities`.
pub fn region_equal(
    a: &IneqSystem,
    b: &IneqSystem,
    equalities: &[EntropyExpr],
) -> Result<RegionComparison> {
    let mut ra = a.rate_vars.clone();
    let mut rb = b.rate_vars.clone();
    ra.sort();
    rb.sort();
    if ra != rb {
        return Err(EntropyError::Incompatible(format!(
            "rate variables differ: {ra:?} vs {rb:?}"
        )));
    }
    let mut eqs: Vec<EntropyExpr> = equalities.to_vec();
    for e in a.equalities.iter().chain(&b.equalities) {
        if !eqs.contains(e) {
            eqs.push(e.clone());
        }
    }
    let mut vars: VarSet = a.variables();
    vars.extend(b.variables());
    for e in &eqs {
        vars.extend(e.variables());
    }
    let na = a.normalized();
    let nb = b.normalized();
    let matches_a = check_all(&na, &nb, &eqs, &vars, &ra)?;
    let matches_b = check_all(&nb, &na, &eqs, &vars, &ra)?;
    let unmatched = |sys: &IneqSystem, m: &[Option<Justification>]| -> Vec<LinIneq> {
        sys.inequalities
            .iter()
            .zip(m)
            .filter(|(_, j)| j.is_none())
            .map(|(q, _)| q.clone())
            .collect()
    };
    let unmatched_a = unmatched(a, &matches_a);
    let unmatched_b = unmatched(b, &matches_b);
    // every inequality of b implied by a means region(a) is inside region(b)
    let (relation, witness) = match (unmatched_a.first(), unmatched_b.first()) {
        (None, None) => (Relation::Equal, None),
        (Some(w), None) => (Relation::ASubsetB, Some(w.clone())),
        (None, Some(w)) => (Relation::BSubsetA, Some(w.clone())),
        (Some(w), Some(_)) => (Relation::Incomparable, Some(w.clone())),
    };
    Ok(RegionComparison {
        relation,
        witness,
        unmatched_a,
        unmatched_b,
        matches_a,
        matches_b,
    })
}

fn check_all(
    targets: &[NormIneq],
    by: &[NormIneq],
    eqs: &[EntropyExpr],
    vars: &VarSet,
    rates: &[String],
) -> Result<Vec<Option<Justification>>> {
    let checker = ImplicationChecker::new(by, eqs, vars, rates)?;
    targets.iter().map(|q| checker.implies(q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entrofme::{fm_eliminate, parse_system, FmOptions};

    const THM1: &str = "rates: R, R~\nR + R~ < H(U|X)\nR~ + R > H(U|Y~)\nR~ < H(U|XY)\n";
    const REGION: &str = "rates: R\nR + I(U;Y~) > I(U;XY)\nI(U;Y~) > I(U;X)\n";

    #[test]
    fn system_equals_itself() {
        let s = parse_system(REGION).unwrap();
        assert_eq!(region_equal(&s, &s, &[]).unwrap().relation, Relation::Equal);
    }

    #[test]
    fn fm_output_matches_region() {
        let sys = parse_system(THM1).unwrap();
        let out = fm_eliminate(&sys, &["R~"], FmOptions::default()).unwrap();
        let r = region_equal(&out, &parse_system(REGION).unwrap(), &[]).unwrap();
        assert_eq!(r.relation, Relation::Equal);
        assert!(r.witness.is_none());
    }

    #[test]
    fn nonneg_extras_are_witnessed() {
        let sys = parse_system(THM1).unwrap();
        let opts = FmOptions {
            nonneg: true,
            prune: false,
        };
        let out = fm_eliminate(&sys, &["R~"], opts).unwrap();
        let r = region_equal(&out, &parse_system(REGION).unwrap(), &[]).unwrap();
        assert_eq!(r.relation, Relation::ASubsetB);
        assert_eq!(r.unmatched_a.len(), 2);
        assert!(r.witness.is_some());
    }

    #[test]
    fn different_rates_rejected() {
        let a = parse_system("rates: R\nR > H(X)").unwrap();
        let b = parse_system("rates: S\nS > H(X)").unwrap();
        assert!(region_equal(&a, &b, &[]).is_err());
    }
}
