use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{digits, pow_f, BinningCode, OsrbError, Result};
use crate::probkit::JointPmf;

/// Relative tolerance under which two posterior scores count as tied.
const TIE_TOL: f64 = 1e-12;

/// Maximum a posteriori decoder of `u^n` from `(g, w, y~^n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwDecoder {
    pub n: usize,
    pub card_u: usize,
    pub card_yt: usize,
    /// `|Y~|^n`.
    pub yt_count: usize,
    /// Flat bin id to row of `table`; `u32::MAX` marks an empty bin.
    pub bin_row: Vec<u32>,
    /// `table[row * |Y~|^n + y~]` is the decoded `u^n`.
    pub table: Vec<u32>,
    /// Decoded sequence reported for empty bins.
    pub default_index: u32,
    pub empty_bins: usize,
}

impl SwDecoder {
    /// Decoded `u^n` for flat bin `bin` and side information `yt`, and
    /// whether the empty-bin default was used.
    pub fn decode(&self, bin: usize, yt: usize) -> (usize, bool) {
        match self.bin_row[bin] {
            u32::MAX => (self.default_index as usize, true),
            r => (self.table[r as usize * self.yt_count + yt] as usize, false),
        }
    }

    pub fn yt_seqs(&self) -> usize {
        self.yt_count
    }
}

/// Per-letter table `p(u, y~)` from a joint with axes `U` and `Y~`.
pub(crate) fn letter_table(joint: &JointPmf, card_u: usize) -> Result<(Vec<f64>, usize)> {
    let j = joint.marginalize(&["U", "Y~"])?.reorder(&["U", "Y~"])?;
    let shape = j.shape();
    if shape[0] != card_u {
        return Err(OsrbError::Invalid(format!(
            "joint has |U| = {} but the code has {card_u}",
            shape[0]
        )));
    }
    Ok((j.table().to_vec(), shape[1]))
}

/// Products `prod_i p(u_i, y~_i)` for every `y~^n`, as a `|Y~|^n x |U|^n`
/// row-major table.
fn scores(pu_yt: &[f64], cu: usize, cyt: usize, n: usize) -> Vec<f64> {
    let (nu, nyt) = (cu.pow(n as u32), cyt.pow(n as u32));
    let mut s = vec![0.0; nu * nyt];
    let (mut du, mut dy) = (vec![0; n], vec![0; n]);
    for yt in 0..nyt {
        digits(yt, cyt, n, &mut dy);
        for u in 0..nu {
            digits(u, cu, n, &mut du);
            s[yt * nu + u] = (0..n).map(|i| pu_yt[du[i] * cyt + dy[i]]).product();
        }
    }
    s
}

/// Builds the MAP-within-bin decoder for `code` under the letter law of
/// `(U, Y~)` in `joint`. Ties go to the lowest sequence index.
pub fn build_sw_decoder(code: &BinningCode, joint: &JointPmf) -> Result<SwDecoder> {
    let (pu_yt, cyt) = letter_table(joint, code.card_u)?;
    let n = code.n;
    if pow_f(code.card_u, n) * pow_f(cyt, n) > (1u64 << 26) as f64 {
        return Err(OsrbError::Cap {
            what: "|U|^n |Y~|^n",
            value: pow_f(code.card_u, n) * pow_f(cyt, n),
            cap: (1u64 << 26) as f64,
        });
    }
    let members = code.members();
    let mut bin_row = vec![u32::MAX; members.len()];
    let mut rows = 0u32;
    for (b, m) in members.iter().enumerate() {
        if !m.is_empty() {
            bin_row[b] = rows;
            rows += 1;
        }
    }
    let (nu, nyt) = (code.sequences(), cyt.pow(n as u32));
    let s = scores(&pu_yt, code.card_u, cyt, n);
    let mut table = vec![0u32; rows as usize * nyt];
    for (b, m) in members.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        let r = bin_row[b] as usize;
        for yt in 0..nyt {
            let row = &s[yt * nu..(yt + 1) * nu];
            let mut best = m[0];
            let mut best_s = row[m[0] as usize];
            for &u in &m[1..] {
                let v = row[u as usize];
                if v > best_s * (1.0 + TIE_TOL) {
                    best = u;
                    best_s = v;
                }
            }
            table[r * nyt + yt] = best;
        }
    }
    Ok(SwDecoder {
        n,
        card_u: code.card_u,
        card_yt: cyt,
        yt_count: nyt,
        empty_bins: members.iter().filter(|m| m.is_empty()).count(),
        bin_row,
        table,
        default_index: 0,
    })
}

/// Exact probability that the decoder misses `u^n` when `(u^n, y~^n)` is
/// i.i.d. from the letter law in `joint`.
pub fn sw_error_prob(code: &BinningCode, decoder: &SwDecoder, joint: &JointPmf) -> Result<f64> {
    let (pu_yt, cyt) = letter_table(joint, code.card_u)?;
    let s = scores(&pu_yt, code.card_u, cyt, code.n);
    let nu = code.sequences();
    let mut err = 0.0;
    for yt in 0..decoder.yt_seqs() {
        for u in 0..nu {
            let p = s[yt * nu + u];
            if p > 0.0 && decoder.decode(code.bin(u), yt).0 != u {
                err += p;
            }
        }
    }
    Ok(err.clamp(0.0, 1.0))
}

/// Monte-Carlo estimate of the decoding error with its standard error.
pub fn sw_error_monte_carlo(
    code: &BinningCode,
    decoder: &SwDecoder,
    joint: &JointPmf,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(OsrbError::Invalid("samples must be positive".into()));
    }
    let (pu_yt, cyt) = letter_table(joint, code.card_u)?;
    let letters = WeightedIndex::new(&pu_yt).map_err(|e| OsrbError::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = 0usize;
    for _ in 0..samples {
        let (mut u, mut yt) = (0, 0);
        for _ in 0..code.n {
            let l = letters.sample(&mut rng);
            u = u * code.card_u + l / cyt;
            yt = yt * cyt + l % cyt;
        }
        if decoder.decode(code.bin(u), yt).0 != u {
            errors += 1;
        }
    }
    let p = errors as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}
