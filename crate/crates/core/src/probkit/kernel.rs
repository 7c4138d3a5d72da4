use serde::{Deserialize, Serialize};

use super::{normalize_probs, Pmf, ProbError, Result};

/// A conditional pmf `p(out | in)` stored as a dense row-stochastic matrix.
///
/// When the input or output is a tuple of variables the index is row-major
/// over the tuple, first variable slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Kernel {
    n_in: usize,
    n_out: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_in = rows.len();
        if n_in == 0 {
            return Err(ProbError::Empty);
        }
        let n_out = rows[0].len();
        let mut data = Vec::with_capacity(n_in * n_out);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_out {
                return Err(ProbError::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {n_out}",
                    row.len()
                )));
            }
            data.extend(normalize_probs(row)?);
        }
        Ok(Self { n_in, n_out, data })
    }

    /// Builds a kernel from a flat row-major buffer.
    pub fn from_flat(n_in: usize, n_out: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_in * n_out {
            return Err(ProbError::ShapeMismatch(format!(
                "{} entries for a {n_in}x{n_out} kernel",
                data.len()
            )));
        }
        let rows = data.chunks(n_out.max(1)).map(<[f64]>::to_vec).collect();
        Self::new(rows)
    }

    pub fn from_fn(n_in: usize, n_out: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(
            (0..n_in)
                .map(|i| (0..n_out).map(|j| f(i, j)).collect())
                .collect(),
        )
    }

    /// Builds a kernel from non-negative row weights, normalizing each row.
    pub fn from_weights(n_in: usize, n_out: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let rows = (0..n_in)
            .map(|i| {
                let w: Vec<f64> = (0..n_out).map(|j| f(i, j)).collect();
                let s: f64 = w.iter().sum();
                if !(s > 0.0 && s.is_finite()) {
                    return Err(ProbError::NotNormalized { sum: s });
                }
                Ok(w.into_iter().map(|v| v / s).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::new(rows)
    }

    pub fn identity(n: usize) -> Self {
        Self::deterministic(n, n, |i| i).expect("identity is well formed")
    }

    /// `out = f(in)` with probability one.
    pub fn deterministic(n_in: usize, n_out: usize, f: impl Fn(usize) -> usize) -> Result<Self> {
        Self::from_fn(n_in, n_out, |i, j| if f(i) == j { 1.0 } else { 0.0 })
    }

    /// Every row equal to `p`.
    pub fn constant(n_in: usize, p: &Pmf) -> Self {
        let data = (0..n_in).flat_map(|_| p.probs().iter().copied()).collect();
        Self {
            n_in,
            n_out: p.len(),
            data,
        }
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel; output symbol 2 is the erasure.
    pub fn bec(e: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - e, 0.0, e], vec![0.0, 1.0 - e, e]])
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_out..(i + 1) * self.n_out]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_out + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_out)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Cascade `self` then `next`: `(self * next)(z|x) = sum_y self(y|x) next(z|y)`.
    pub fn then(&self, next: &Kernel) -> Result<Kernel> {
        if self.n_out != next.n_in {
            return Err(ProbError::AlphabetMismatch(format!(
                "cannot chain a kernel with {} outputs into one with {} inputs",
                self.n_out, next.n_in
            )));
        }
        let mut data = vec![0.0; self.n_in * next.n_out];
        for i in 0..self.n_in {
            for (y, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (z, &b) in next.row(y).iter().enumerate() {
                    data[i * next.n_out + z] += a * b;
                }
            }
        }
        Ok(Kernel {
            n_in: self.n_in,
            n_out: next.n_out,
            data,
        })
    }

    /// Output law when the input is drawn from `p`.
    pub fn push(&self, p: &Pmf) -> Result<Pmf> {
        if p.len() != self.n_in {
            return Err(ProbError::AlphabetMismatch(format!(
                "pmf over {} symbols into kernel with {} inputs",
                p.len(),
                self.n_in
            )));
        }
        let mut out = vec![0.0; self.n_out];
        for (i, &pi) in p.probs().iter().enumerate() {
            for (j, &k) in self.row(i).iter().enumerate() {
                out[j] += pi * k;
            }
        }
        Pmf::new(out)
    }

    /// True when every row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.rows()
            .all(|r| r.iter().filter(|&&p| p > 0.0).count() == 1 && r.contains(&1.0))
    }

    /// Relabels outputs: new output `j` is old output `perm[j]`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<Kernel> {
        if perm.len() != self.n_out {
            return Err(ProbError::ShapeMismatch("permutation length".into()));
        }
        Kernel::from_fn(self.n_in, self.n_out, |i, j| self.get(i, perm[j]))
    }

    /// Relabels inputs: new input `i` is old input `perm[i]`.
    pub fn permute_inputs(&self, perm: &[usize]) -> Result<Kernel> {
        if perm.len() != self.n_in {
            return Err(ProbError::ShapeMismatch("permutation length".into()));
        }
        Kernel::from_fn(self.n_in, self.n_out, |i, j| self.get(perm[i], j))
    }
}

impl TryFrom<Vec<Vec<f64>>> for Kernel {
    type Error = ProbError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<Kernel> for Vec<Vec<f64>> {
    fn from(k: Kernel) -> Self {
        k.rows().map(<[f64]>::to_vec).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bec_then_erasure_coin_is_bsc_quarter() {
        let bec = Kernel::bec(0.5).unwrap();
        let degrade = Kernel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let k = bec.then(&degrade).unwrap();
        let bsc = Kernel::bsc(0.25).unwrap();
        for (a, b) in k.as_flat().iter().zip(bsc.as_flat()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(
            Kernel::new(vec![vec![1.0], vec![0.5, 0.5]]),
            Err(ProbError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn chaining_checks_alphabets() {
        let a = Kernel::identity(2);
        let b = Kernel::identity(3);
        assert!(a.then(&b).is_err());
    }

    #[test]
    fn deterministic_detection() {
        assert!(Kernel::identity(3).is_deterministic());
        assert!(!Kernel::bsc(0.1).unwrap().is_deterministic());
    }
}
