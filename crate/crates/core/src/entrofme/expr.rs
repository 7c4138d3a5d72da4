use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{EntropyError, Result};
use crate::probkit::JointPmf;

/// Canonical (sorted) set of variable labels.
pub type VarSet = BTreeSet<String>;

/// `sum_S c_S H(S) + constant`, with no zero coefficients and no empty `S`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EntropyExpr {
    coeffs: BTreeMap<VarSet, BigRational>,
    constant: BigRational,
}

pub(crate) fn varset<S: AsRef<str>>(labels: &[S]) -> VarSet {
    labels.iter().map(|s| s.as_ref().to_string()).collect()
}

impl EntropyExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    /// `H(S)`.
    pub fn entropy<S: AsRef<str>>(s: &[S]) -> Self {
        let mut e = Self::zero();
        e.add_term(varset(s), BigRational::one());
        e
    }

    /// `H(A|B) = H(AB) - H(B)`.
    pub fn cond_entropy<S: AsRef<str>>(a: &[S], b: &[S]) -> Self {
        let ab: VarSet = varset(a).into_iter().chain(varset(b)).collect();
        let mut e = Self::zero();
        e.add_term(ab, BigRational::one());
        e.add_term(varset(b), -BigRational::one());
        e
    }

    /// `I(A;B|C) = H(AC) + H(BC) - H(ABC) - H(C)`.
    pub fn mutual_info<S: AsRef<str>>(a: &[S], b: &[S], c: &[S]) -> Self {
        let c_set = varset(c);
        let ac: VarSet = varset(a).into_iter().chain(c_set.iter().cloned()).collect();
        let bc: VarSet = varset(b).into_iter().chain(c_set.iter().cloned()).collect();
        let abc: VarSet = ac.iter().chain(&bc).cloned().collect();
        let one = BigRational::one();
        let mut e = Self::zero();
        e.add_term(ac, one.clone());
        e.add_term(bc, one.clone());
        e.add_term(abc, -one.clone());
        e.add_term(c_set, -one);
        e
    }

    pub(crate) fn add_term(&mut self, s: VarSet, c: BigRational) {
        if s.is_empty() || c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(s).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.retain(|_, v| !v.is_zero());
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<VarSet, BigRational> {
        &self.coeffs
    }

    pub fn constant_term(&self) -> &BigRational {
        &self.constant
    }

    pub fn coeff(&self, s: &VarSet) -> BigRational {
        self.coeffs
            .get(s)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    /// True when no entropy atom remains.
    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn variables(&self) -> VarSet {
        self.coeffs.keys().flatten().cloned().collect()
    }

    pub fn scaled(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(s, c)| (s.clone(), c * k))
                .collect(),
            constant: &self.constant * k,
        }
    }

    /// Applies a label substitution; labels missing from `map` are kept.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Self {
        let mut e = Self::constant(self.constant.clone());
        for (s, c) in &self.coeffs {
            let renamed = s
                .iter()
                .map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone()))
                .collect();
            e.add_term(renamed, c.clone());
        }
        e
    }

    /// Evaluates with a caller-supplied entropy function.
    pub fn eval_with(&self, mut h: impl FnMut(&VarSet) -> Result<f64>) -> Result<f64> {
        let mut total = to_f64(&self.constant);
        for (s, c) in &self.coeffs {
            total += to_f64(c) * h(s)?;
        }
        Ok(total)
    }
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Numeric value of `e` on a joint whose axes carry the expression's labels.
pub fn eval_expr(e: &EntropyExpr, j: &JointPmf) -> Result<f64> {
    e.eval_with(|s| {
        let vars: Vec<&str> = s.iter().map(String::as_str).collect();
        for v in &vars {
            if j.axis_index(v).is_err() {
                return Err(EntropyError::UnknownVariable(v.to_string()));
            }
        }
        Ok(j.entropy(&vars)?)
    })
}

impl Add for &EntropyExpr {
    type Output = EntropyExpr;
    fn add(self, rhs: &EntropyExpr) -> EntropyExpr {
        let mut e = self.clone();
        for (s, c) in &rhs.coeffs {
            e.add_term(s.clone(), c.clone());
        }
        e.constant += &rhs.constant;
        e
    }
}

impl Sub for &EntropyExpr {
    type Output = EntropyExpr;
    fn sub(self, rhs: &EntropyExpr) -> EntropyExpr {
        self + &(-rhs)
    }
}

impl Neg for &EntropyExpr {
    type Output = EntropyExpr;
    fn neg(self) -> EntropyExpr {
        self.scaled(&-BigRational::one())
    }
}

impl Mul<&BigRational> for &EntropyExpr {
    type Output = EntropyExpr;
    fn mul(self, k: &BigRational) -> EntropyExpr {
        self.scaled(k)
    }
}

pub(crate) fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Writes `sign coeff*item` with the sign separated for all but the first term.
pub(crate) fn write_term(
    f: &mut impl fmt::Write,
    first: bool,
    c: &BigRational,
    item: &str,
) -> fmt::Result {
    let neg = c.is_negative();
    match (first, neg) {
        (true, true) => f.write_str("-")?,
        (true, false) => {}
        (false, true) => f.write_str(" - ")?,
        (false, false) => f.write_str(" + ")?,
    }
    let a = c.abs();
    if item.is_empty() {
        return f.write_str(&fmt_rational(&a));
    }
    if !a.is_one() {
        write!(f, "{}*", fmt_rational(&a))?;
    }
    f.write_str(item)
}

pub(crate) fn atom_str(s: &VarSet) -> String {
    format!("H({})", s.iter().map(String::as_str).collect::<String>())
}

impl fmt::Display for EntropyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, c) in &self.coeffs {
            write_term(f, first, c, &atom_str(s))?;
            first = false;
        }
        if !self.constant.is_zero() || first {
            write_term(f, first, &self.constant, "")?;
        }
        Ok(())
    }
}

impl FromStr for EntropyExpr {
    type Err = EntropyError;
    fn from_str(s: &str) -> Result<Self> {
        parse_expr(s)
    }
}

impl Serialize for EntropyExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EntropyExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_expr(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses an entropy expression (no rate variables) into canonical form.
pub fn parse_expr(text: &str) -> Result<EntropyExpr> {
    let mut c = Cursor::new(text, 1);
    let lin = c.parse_lin(&|_| false)?;
    c.skip_ws();
    if !c.at_end() {
        return Err(c.err("unexpected trailing input"));
    }
    Ok(lin.expr)
}

/// A linear combination of rate variables and entropy atoms.
#[derive(Clone, Debug, Default)]
pub(crate) struct Lin {
    pub rates: BTreeMap<String, BigRational>,
    pub expr: EntropyExpr,
}

impl Lin {
    fn add_scaled(&mut self, other: Lin, k: &BigRational) {
        for (r, c) in other.rates {
            let e = self.rates.entry(r).or_insert_with(BigRational::zero);
            *e += c * k;
        }
        self.rates.retain(|_, v| !v.is_zero());
        self.expr = &self.expr + &other.expr.scaled(k);
    }
}

pub(crate) struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

const PRECOMPOSED: &[(char, char)] = &[
    ('Ã', 'A'),
    ('Ẽ', 'E'),
    ('Ĩ', 'I'),
    ('Ñ', 'N'),
    ('Õ', 'O'),
    ('Ũ', 'U'),
    ('Ṽ', 'V'),
    ('Ỹ', 'Y'),
];

impl Cursor {
    pub(crate) fn new(text: &str, line: usize) -> Self {
        Self {
            chars: text.chars().collect(),
            pos: 0,
            line,
        }
    }

    pub(crate) fn err(&self, msg: &str) -> EntropyError {
        EntropyError::Syntax {
            line: self.line,
            col: self.pos + 1,
            msg: msg.to_string(),
        }
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    pub(crate) fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    pub(crate) fn at_var_start(&self) -> bool {
        match self.peek() {
            Some(c) if c.is_ascii_uppercase() => true,
            Some(c) if PRECOMPOSED.iter().any(|&(p, _)| p == c) => true,
            Some('\\') => self.starts_with("\\tilde"),
            _ => false,
        }
    }

    /// One variable label, normalized to `Letter[~][digits][']`.
    pub(crate) fn parse_var(&mut self) -> Result<String> {
        let (base, mut tilde) = if self.starts_with("\\tilde") {
            self.pos += "\\tilde".len();
            let braced = self.eat('{');
            self.skip_ws();
            let b = match self.bump() {
                Some(c) if c.is_ascii_uppercase() => c,
                _ => {
                    self.pos -= 1;
                    return Err(self.err("expected an uppercase letter after \\tilde"));
                }
            };
            if braced && !self.eat('}') {
                return Err(self.err("expected `}`"));
            }
            (b, true)
        } else {
            match self.peek() {
                Some(c) if c.is_ascii_uppercase() => {
                    self.pos += 1;
                    (c, false)
                }
                Some(c) => match PRECOMPOSED.iter().find(|&&(p, _)| p == c) {
                    Some(&(_, b)) => {
                        self.pos += 1;
                        (b, true)
                    }
                    None => return Err(self.err("expected a variable")),
                },
                None => return Err(self.err("expected a variable")),
            }
        };
        if self.eat('~') || self.eat('\u{0303}') {
            tilde = true;
        }
        let mut label = String::from(base);
        if tilde {
            label.push('~');
        }
        let underscore = self.eat('_');
        let braced = underscore && self.eat('{');
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if underscore && self.pos == start {
            return Err(self.err("expected digits after `_`"));
        }
        label.extend(&self.chars[start..self.pos]);
        if braced && !self.eat('}') {
            return Err(self.err("expected `}`"));
        }
        while self.eat('\'') {
            label.push('\'');
        }
        Ok(label)
    }

    fn parse_varlist(&mut self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if !self.at_var_start() {
                break;
            }
            out.push(self.parse_var()?);
            self.skip_ws();
            self.eat(',');
        }
        if out.is_empty() {
            return Err(self.err("expected at least one variable"));
        }
        Ok(out)
    }

    fn parse_atom(&mut self) -> Result<EntropyExpr> {
        let kind = self.bump();
        self.expect('(')?;
        let e = match kind {
            Some('H') => {
                let a = self.parse_varlist()?;
                self.skip_ws();
                let b = if self.eat('|') {
                    self.parse_varlist()?
                } else {
                    vec![]
                };
                EntropyExpr::cond_entropy(&a, &b)
            }
            _ => {
                let a = self.parse_varlist()?;
                self.expect(';')?;
                let b = self.parse_varlist()?;
                self.skip_ws();
                let c = if self.eat('|') {
                    self.parse_varlist()?
                } else {
                    vec![]
                };
                EntropyExpr::mutual_info(&a, &b, &c)
            }
        };
        self.expect(')')?;
        Ok(e)
    }

    fn parse_number(&mut self) -> Result<BigRational> {
        let start = self.pos;
        let digits = |c: &mut Cursor| {
            let s = c.pos;
            while c.peek().is_some_and(|ch| ch.is_ascii_digit()) {
                c.pos += 1;
            }
            c.chars[s..c.pos].iter().collect::<String>()
        };
        let int = digits(self);
        let mut value = BigRational::from_integer(int.parse::<BigInt>().map_err(|_| {
            self.pos = start;
            self.err("malformed number")
        })?);
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
            let frac = digits(self);
            let scale = num::pow(BigInt::from(10), frac.len());
            let f: BigInt = frac.parse().expect("digits");
            value += BigRational::new(f, scale);
        }
        if self.peek() == Some('/') {
            self.pos += 1;
            let den = digits(self);
            let d: BigInt = den
                .parse()
                .map_err(|_| self.err("expected a denominator"))?;
            if d.is_zero() {
                return Err(self.err("division by zero"));
            }
            value /= BigRational::from_integer(d);
        }
        Ok(value)
    }

    fn at_atom(&self) -> bool {
        matches!(self.peek(), Some('H' | 'I')) && {
            let mut k = 1;
            while self.peek_at(k).is_some_and(char::is_whitespace) {
                k += 1;
            }
            self.peek_at(k) == Some('(')
        }
    }

    fn parse_item(&mut self, is_rate: &dyn Fn(&str) -> bool) -> Result<Lin> {
        self.skip_ws();
        if self.at_atom() {
            return Ok(Lin {
                rates: BTreeMap::new(),
                expr: self.parse_atom()?,
            });
        }
        if self.at_var_start() {
            let start = self.pos;
            let v = self.parse_var()?;
            if is_rate(&v) {
                let mut rates = BTreeMap::new();
                rates.insert(v, BigRational::one());
                return Ok(Lin {
                    rates,
                    expr: EntropyExpr::zero(),
                });
            }
            self.pos = start;
            return Err(EntropyError::UnknownRate(v));
        }
        Err(self.err("expected H(..), I(..) or a rate variable"))
    }

    fn parse_term(&mut self, is_rate: &dyn Fn(&str) -> bool) -> Result<Lin> {
        self.skip_ws();
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            let k = self.parse_number()?;
            self.skip_ws();
            let explicit = self.eat('*');
            self.skip_ws();
            if explicit || self.at_atom() || self.at_var_start() {
                let mut out = Lin::default();
                out.add_scaled(self.parse_item(is_rate)?, &k);
                return Ok(out);
            }
            return Ok(Lin {
                rates: BTreeMap::new(),
                expr: EntropyExpr::constant(k),
            });
        }
        self.parse_item(is_rate)
    }

    /// Parses a signed sum of terms, stopping before a comparison or `)`.
    pub(crate) fn parse_lin(&mut self, is_rate: &dyn Fn(&str) -> bool) -> Result<Lin> {
        let mut out = Lin::default();
        self.skip_ws();
        let mut sign = BigRational::one();
        if self.eat('-') {
            sign = -sign;
        } else {
            self.eat('+');
        }
        loop {
            let t = self.parse_term(is_rate)?;
            out.add_scaled(t, &sign);
            self.skip_ws();
            if self.eat('+') {
                sign = BigRational::one();
            } else if self.eat('-') {
                sign = -BigRational::one();
            } else {
                break;
            }
        }
        Ok(out)
    }
}
