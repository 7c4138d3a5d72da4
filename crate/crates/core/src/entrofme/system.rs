use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num::{BigRational, One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::expr::{to_f64, write_term, Cursor, Lin};
use super::{EntropyError, EntropyExpr, Result, VarSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Sense {
    pub fn is_strict(self) -> bool {
        matches!(self, Sense::Lt | Sense::Gt)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Lt => "<",
            Sense::Le => "<=",
            Sense::Gt => ">",
            Sense::Ge => ">=",
        }
    }
}

/// `sum_r c_r r  sense  rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinIneq {
    pub rate_coeffs: BTreeMap<String, BigRational>,
    pub rhs: EntropyExpr,
    pub sense: Sense,
}

/// Internal normal form `sum_r a_r r + expr > 0` (or `>= 0`), scaled so the
/// leading coefficient has absolute value one. Two inequalities describe the
/// same half-space exactly when their normal forms are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NormIneq {
    pub rates: BTreeMap<String, BigRational>,
    pub expr: EntropyExpr,
    pub strict: bool,
}

impl NormIneq {
    pub fn new(rates: BTreeMap<String, BigRational>, expr: EntropyExpr, strict: bool) -> Self {
        let mut rates = rates;
        rates.retain(|_, v| !v.is_zero());
        let mut n = Self {
            rates,
            expr,
            strict,
        };
        n.rescale();
        n
    }

    fn rescale(&mut self) {
        let pivot = self
            .rates
            .values()
            .next()
            .or_else(|| self.expr.coeffs().values().next())
            .cloned()
            .unwrap_or_else(|| self.expr.constant_term().clone());
        if pivot.is_zero() {
            return;
        }
        let k = BigRational::one() / pivot.abs();
        if k.is_one() {
            return;
        }
        for v in self.rates.values_mut() {
            *v = &*v * &k;
        }
        self.expr = self.expr.scaled(&k);
    }

    /// No rates and no atoms: the inequality is a constant comparison.
    pub fn is_trivial(&self) -> bool {
        self.rates.is_empty() && self.expr.is_constant()
    }

    /// Value of a trivial inequality.
    pub fn trivially_true(&self) -> bool {
        let c = self.expr.constant_term();
        if self.strict {
            c.is_positive()
        } else {
            !c.is_negative()
        }
    }

    /// `sum a_r r + expr` for numeric rates and entropy values.
    pub fn slack(
        &self,
        rates: &BTreeMap<String, f64>,
        h: impl FnMut(&VarSet) -> Result<f64>,
    ) -> Result<f64> {
        let mut total = self.expr.eval_with(h)?;
        for (r, c) in &self.rates {
            let v = rates
                .get(r)
                .ok_or_else(|| EntropyError::UnknownRate(r.clone()))?;
            total += to_f64(c) * v;
        }
        Ok(total)
    }

    pub fn to_lin(&self) -> LinIneq {
        let strict = self.strict;
        if self.rates.values().any(|c| c.is_positive()) {
            LinIneq {
                rate_coeffs: self.rates.clone(),
                rhs: -&self.expr,
                sense: if strict { Sense::Gt } else { Sense::Ge },
            }
        } else {
            LinIneq {
                rate_coeffs: self.rates.iter().map(|(r, c)| (r.clone(), -c)).collect(),
                rhs: self.expr.clone(),
                sense: if strict { Sense::Lt } else { Sense::Le },
            }
        }
    }
}

impl fmt::Display for NormIneq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_lin().fmt(f)
    }
}

impl LinIneq {
    pub fn new(rate_coeffs: BTreeMap<String, BigRational>, sense: Sense, rhs: EntropyExpr) -> Self {
        let mut rate_coeffs = rate_coeffs;
        rate_coeffs.retain(|_, v| !v.is_zero());
        Self {
            rate_coeffs,
            rhs,
            sense,
        }
    }

    pub fn normalized(&self) -> NormIneq {
        match self.sense {
            Sense::Gt | Sense::Ge => {
                NormIneq::new(self.rate_coeffs.clone(), -&self.rhs, self.sense.is_strict())
            }
            Sense::Lt | Sense::Le => NormIneq::new(
                self.rate_coeffs
                    .iter()
                    .map(|(r, c)| (r.clone(), -c))
                    .collect(),
                self.rhs.clone(),
                self.sense.is_strict(),
            ),
        }
    }

    /// Parses one inequality; bare identifiers must be in `rates`.
    pub fn parse(text: &str, rates: &[String]) -> Result<Self> {
        parse_ineq(&mut Cursor::new(text, 1), rates)
    }
}

impl fmt::Display for LinIneq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (r, c) in &self.rate_coeffs {
            write_term(f, first, c, r)?;
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " {} {}", self.sense.symbol(), self.rhs)
    }
}

impl Serialize for LinIneq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn is_declared(rates: &[String]) -> impl Fn(&str) -> bool + '_ {
    move |v| rates.iter().any(|r| r == v)
}

fn parse_comparison(c: &mut Cursor) -> Result<Option<Sense>> {
    c.skip_ws();
    let s = match c.peek() {
        Some('<') => {
            c.bump();
            if c.peek() == Some('=') {
                c.bump();
                Sense::Le
            } else {
                Sense::Lt
            }
        }
        Some('>') => {
            c.bump();
            if c.peek() == Some('=') {
                c.bump();
                Sense::Ge
            } else {
                Sense::Gt
            }
        }
        Some('≤') => {
            c.bump();
            Sense::Le
        }
        Some('≥') => {
            c.bump();
            Sense::Ge
        }
        _ => return Ok(None),
    };
    Ok(Some(s))
}

fn diff(lhs: Lin, rhs: Lin) -> (BTreeMap<String, BigRational>, EntropyExpr) {
    let mut rates = lhs.rates;
    for (r, c) in rhs.rates {
        let e = rates.entry(r).or_insert_with(BigRational::zero);
        *e -= c;
    }
    rates.retain(|_, v| !v.is_zero());
    (rates, &rhs.expr - &lhs.expr)
}

fn parse_ineq(c: &mut Cursor, rates: &[String]) -> Result<LinIneq> {
    let lhs = c.parse_lin(&is_declared(rates))?;
    let sense = parse_comparison(c)?.ok_or_else(|| c.err("expected <, <=, > or >="))?;
    let rhs = c.parse_lin(&is_declared(rates))?;
    c.skip_ws();
    if !c.at_end() {
        return Err(c.err("unexpected trailing input"));
    }
    let (rate_coeffs, rhs) = diff(lhs, rhs);
    Ok(LinIneq::new(rate_coeffs, sense, rhs))
}

fn parse_equality(c: &mut Cursor) -> Result<EntropyExpr> {
    let lhs = c.parse_lin(&|_| false)?;
    c.skip_ws();
    if c.bump() != Some('=') {
        return Err(c.err("expected `=`"));
    }
    let rhs = c.parse_lin(&|_| false)?;
    c.skip_ws();
    if !c.at_end() {
        return Err(c.err("unexpected trailing input"));
    }
    Ok(&lhs.expr - &rhs.expr)
}

/// A system of linear rate inequalities with entropic right-hand sides, plus
/// entropic equalities `expr = 0` that hold for every admissible law.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IneqSystem {
    pub rate_vars: Vec<String>,
    pub inequalities: Vec<LinIneq>,
    pub equalities: Vec<EntropyExpr>,
}

impl IneqSystem {
    pub fn new(
        rate_vars: Vec<String>,
        inequalities: Vec<LinIneq>,
        equalities: Vec<EntropyExpr>,
    ) -> Result<Self> {
        for q in &inequalities {
            if let Some(r) = q.rate_coeffs.keys().find(|r| !rate_vars.contains(r)) {
                return Err(EntropyError::UnknownRate(r.clone()));
            }
        }
        Ok(Self {
            rate_vars,
            inequalities,
            equalities,
        })
    }

    pub fn normalized(&self) -> Vec<NormIneq> {
        self.inequalities.iter().map(LinIneq::normalized).collect()
    }

    /// Every random-variable label referenced anywhere in the system.
    pub fn variables(&self) -> VarSet {
        let mut v = BTreeSet::new();
        for q in &self.inequalities {
            v.extend(q.rhs.variables());
        }
        for e in &self.equalities {
            v.extend(e.variables());
        }
        v
    }

    /// Slack of each inequality in normal form at the given point.
    pub fn slacks(
        &self,
        rates: &BTreeMap<String, f64>,
        mut h: impl FnMut(&VarSet) -> Result<f64>,
    ) -> Result<Vec<f64>> {
        self.normalized()
            .iter()
            .map(|n| n.slack(rates, &mut h))
            .collect()
    }
}

impl fmt::Display for IneqSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rates: {}", self.rate_vars.join(", "))?;
        for q in &self.inequalities {
            writeln!(f, "{q}")?;
        }
        for e in &self.equalities {
            writeln!(f, "eq: {e} = 0")?;
        }
        Ok(())
    }
}

impl FromStr for IneqSystem {
    type Err = EntropyError;
    fn from_str(s: &str) -> Result<Self> {
        parse_system(s)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemRepr {
    rate_vars: Vec<String>,
    inequalities: Vec<String>,
    equalities: Vec<String>,
}

impl Serialize for IneqSystem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SystemRepr {
            rate_vars: self.rate_vars.clone(),
            inequalities: self.inequalities.iter().map(ToString::to_string).collect(),
            equalities: self.equalities.iter().map(ToString::to_string).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IneqSystem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let r = SystemRepr::deserialize(d)?;
        let ineqs = r
            .inequalities
            .iter()
            .map(|s| LinIneq::parse(s, &r.rate_vars))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let eqs = r
            .equalities
            .iter()
            .map(|s| s.parse::<EntropyExpr>())
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        IneqSystem::new(r.rate_vars, ineqs, eqs).map_err(D::Error::custom)
    }
}

/// Parses the line-oriented system format described in the module docs.
pub fn parse_system(text: &str) -> Result<IneqSystem> {
    let mut sys = IneqSystem::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let mut c = Cursor::new(line, line_no);
        c.skip_ws();
        let rest: String = line.trim_start().to_string();
        if let Some(list) = rest.strip_prefix("rates:") {
            let offset = line.len() - list.len();
            let mut rc = Cursor::new(list, line_no);
            loop {
                rc.skip_ws();
                if rc.at_end() {
                    break;
                }
                let v = rc.parse_var().map_err(|e| shift(e, offset))?;
                if !sys.rate_vars.contains(&v) {
                    sys.rate_vars.push(v);
                }
                rc.skip_ws();
                if !rc.at_end() && rc.bump() != Some(',') {
                    return Err(shift(rc.err("expected `,`"), offset));
                }
            }
        } else if let Some(body) = rest.strip_prefix("eq:") {
            let offset = line.len() - body.len();
            let mut ec = Cursor::new(body, line_no);
            sys.equalities
                .push(parse_equality(&mut ec).map_err(|e| shift(e, offset))?);
        } else {
            sys.inequalities.push(parse_ineq(&mut c, &sys.rate_vars)?);
        }
    }
    Ok(sys)
}

fn shift(e: EntropyError, offset: usize) -> EntropyError {
    match e {
        EntropyError::Syntax { line, col, msg } => EntropyError::Syntax {
            line,
            col: col + offset,
            msg,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THM1: &str = "rates: R, R~\nR + R~ < H(U|X)\nR~ + R > H(U|Y~)\nR~ < H(U|XY)\n";

    #[test]
    fn parses_point_to_point_system() {
        let s = parse_system(THM1).unwrap();
        assert_eq!(s.rate_vars, vec!["R", "R~"]);
        assert_eq!(s.inequalities.len(), 3);
        assert_eq!(s.inequalities[2].to_string(), "R~ < H(UXY) - H(XY)");
        let again = parse_system(&s.to_string()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn undeclared_rate_is_rejected() {
        assert!(matches!(
            parse_system("rates: R\nR + Q < H(X)"),
            Err(EntropyError::UnknownRate(_))
        ));
    }

    #[test]
    fn syntax_error_reports_line() {
        match parse_system("rates: R\n\nR < H(X") {
            Err(EntropyError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn normal_form_is_scale_free() {
        let rates = vec!["R".to_string()];
        let a = LinIneq::parse("2 R > 2 H(X)", &rates).unwrap().normalized();
        let b = LinIneq::parse("R - H(X) > 0", &rates).unwrap().normalized();
        let c = LinIneq::parse("H(X) < R", &rates).unwrap().normalized();
        assert_eq!(a, b);
        assert_eq!(b, c);
        let weak = LinIneq::parse("R >= H(X)", &rates).unwrap().normalized();
        assert_ne!(a, weak);
    }

    #[test]
    fn equality_lines() {
        let s = parse_system("rates: R\neq: H(UV|XY) = H(U|X) + H(V|Y)").unwrap();
        assert_eq!(s.equalities.len(), 1);
        assert!(!s.equalities[0].is_zero());
    }

    #[test]
    fn json_round_trip() {
        let s = parse_system(THM1).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        let back: IneqSystem = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
