use serde::{Deserialize, Serialize};

use super::{normalize_probs, ProbError, Result};

/// A probability vector over `0..len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Ok(Self {
            probs: normalize_probs(probs)?,
        })
    }

    /// Normalizes non-negative weights with a positive finite sum.
    pub fn from_weights(w: Vec<f64>) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if w.is_empty() {
            return Err(ProbError::Empty);
        }
        if !(s > 0.0 && s.is_finite()) || w.iter().any(|&v| v < 0.0) {
            return Err(ProbError::NotNormalized { sum: s });
        }
        Self::new(w.into_iter().map(|v| v / s).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(ProbError::Empty);
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn point(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(ProbError::InvalidArgument(format!(
                "point mass at {at} outside alphabet of size {n}"
            )));
        }
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = ProbError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

/// Shannon entropy in bits of a (not necessarily normalized) mass vector.
pub fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    // -0.0 and tiny negative rounding both collapse to 0
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_bit_has_one_bit() {
        assert_eq!(Pmf::uniform(2).unwrap().entropy(), 1.0);
    }

    #[test]
    fn point_mass_has_zero_entropy() {
        assert_eq!(Pmf::new(vec![1.0, 0.0]).unwrap().entropy(), 0.0);
    }

    #[test]
    fn bernoulli_005() {
        // -0.05 log2 0.05 - 0.95 log2 0.95
        let h = Pmf::bernoulli(0.05).unwrap().entropy();
        assert!((h - 0.286_396_957).abs() < 1e-4, "{h}");
    }

    #[test]
    fn small_drift_is_renormalized() {
        let p = Pmf::new(vec![0.5 + 4e-10, 0.5]).unwrap();
        let s: f64 = p.probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn large_drift_is_rejected() {
        assert!(matches!(
            Pmf::new(vec![0.6, 0.5]),
            Err(ProbError::NotNormalized { .. })
        ));
        assert!(matches!(
            Pmf::new(vec![1.5, -0.5]),
            Err(ProbError::InvalidEntry { index: 1, .. })
        ));
        assert_eq!(Pmf::new(vec![]), Err(ProbError::Empty));
    }

    #[test]
    fn json_round_trip() {
        let p: Pmf = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), "[0.25,0.75]");
        assert!(serde_json::from_str::<Pmf>("[0.25, 0.25]").is_err());
    }
}
