use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{pow_f, OsrbError, Result};

/// Default cap on `|U|^n`.
pub const DEFAULT_SEQUENCE_CAP: usize = 1 << 20;

/// `ceil(2^(n rate))`, with a small tolerance so exact powers of two are
/// not bumped up by rounding.
pub fn bin_count(n: usize, rate: f64) -> Result<usize> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(OsrbError::Invalid(format!("rate must be finite and >= 0, got {rate}")));
    }
    let v = (n as f64 * rate).exp2();
    if v > u32::MAX as f64 {
        return Err(OsrbError::Cap {
            what: "bin count",
            value: v,
            cap: u32::MAX as f64,
        });
    }
    Ok(((v - 1e-9).ceil() as usize).max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinningCode {
    pub n: usize,
    pub card_u: usize,
    /// Rate of the extra randomness `g`, bits per symbol.
    pub rate_g: f64,
    /// Rate of the shared randomness `w`, bits per symbol.
    pub rate_w: f64,
    pub num_g: usize,
    pub num_w: usize,
    pub g_map: Vec<u32>,
    pub w_map: Vec<u32>,
    pub seed: u64,
}

impl BinningCode {
    pub fn sequences(&self) -> usize {
        self.g_map.len()
    }

    /// Flat bin id `g * num_w + w` of sequence `u`.
    pub fn bin(&self, u: usize) -> usize {
        self.g_map[u] as usize * self.num_w + self.w_map[u] as usize
    }

    pub fn num_bins(&self) -> usize {
        self.num_g * self.num_w
    }

    /// Members of each flat bin, in increasing sequence order.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut m = vec![Vec::new(); self.num_bins()];
        for u in 0..self.sequences() {
            m[self.bin(u)].push(u as u32);
        }
        m
    }
}

/// Assigns every `u^n` uniform i.i.d. indices `g < ceil(2^(n rate_g))` and
/// `w < ceil(2^(n rate_w))` from a generator seeded with `seed`.
pub fn draw_binning(n: usize, rate_g: f64, rate_w: f64, card_u: usize, seed: u64, cap: usize) -> Result<BinningCode> {
    if n == 0 || card_u == 0 {
        return Err(OsrbError::Invalid("blocklength and |U| must be positive".into()));
    }
    let seqs = pow_f(card_u, n);
    if seqs > cap as f64 {
        return Err(OsrbError::Cap {
            what: "|U|^n",
            value: seqs,
            cap: cap as f64,
        });
    }
    let (num_g, num_w) = (bin_count(n, rate_g)?, bin_count(n, rate_w)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seqs = seqs as usize;
    let (mut g_map, mut w_map) = (Vec::with_capacity(seqs), Vec::with_capacity(seqs));
    for _ in 0..seqs {
        g_map.push(rng.gen_range(0..num_g) as u32);
        w_map.push(rng.gen_range(0..num_w) as u32);
    }
    Ok(BinningCode {
        n,
        card_u,
        rate_g,
        rate_w,
        num_g,
        num_w,
        g_map,
        w_map,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rates_give_one_bin() {
        let c = draw_binning(3, 0.0, 0.0, 2, 9, DEFAULT_SEQUENCE_CAP).unwrap();
        assert_eq!((c.num_g, c.num_w), (1, 1));
        assert!(c.g_map.iter().chain(&c.w_map).all(|&b| b == 0));
    }

    #[test]
    fn counts_round_up() {
        assert_eq!(bin_count(2, 0.5).unwrap(), 2);
        assert_eq!(bin_count(3, 1.0 / 3.0).unwrap(), 2);
        assert_eq!(bin_count(6, 0.3).unwrap(), 4);
        assert_eq!(bin_count(4, 0.0).unwrap(), 1);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            draw_binning(21, 0.0, 0.0, 2, 0, DEFAULT_SEQUENCE_CAP),
            Err(OsrbError::Cap { .. })
        ));
    }

    #[test]
    fn occupancy_is_uniform_over_seeds() {
        let mut counts = [0usize; 4];
        let trials = 10_000;
        for s in 0..trials {
            let c = draw_binning(1, 1.0, 1.0, 2, s, DEFAULT_SEQUENCE_CAP).unwrap();
            counts[c.bin(0)] += 1;
        }
        let expect = trials as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        // 3 degrees of freedom; 16.27 is the 0.999 quantile
        assert!(chi2 < 16.27, "{counts:?}");
    }
}
