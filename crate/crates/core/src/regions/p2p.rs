use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{check_rate, info, split_card, RegionError, RegionReport, Result};
use crate::probkit::{compose, total_variation, Factor, JointPmf, Kernel, Pmf};

/// Simulate `target: X -> Y` under input law `input_pmf` from `resource:
/// X~ -> Y~` with shared randomness at `rate` bits per use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct P2PInstance {
    pub input_pmf: Pmf,
    pub target: Kernel,
    pub resource: Kernel,
    pub rate: f64,
}

impl P2PInstance {
    pub fn new(input_pmf: Pmf, target: Kernel, resource: Kernel, rate: f64) -> Result<Self> {
        let inst = Self {
            input_pmf,
            target,
            resource,
            rate,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target.n_in() != self.input_pmf.len() {
            return Err(RegionError::Invalid(format!(
                "target has {} input rows but the input pmf has {} symbols",
                self.target.n_in(),
                self.input_pmf.len()
            )));
        }
        check_rate(self.rate, "rate")
    }

    pub fn card_x(&self) -> usize {
        self.input_pmf.len()
    }

    pub fn card_y(&self) -> usize {
        self.target.n_out()
    }

    pub fn card_xt(&self) -> usize {
        self.resource.n_in()
    }

    pub fn card_yt(&self) -> usize {
        self.resource.n_out()
    }

    /// `p(x) p(y|x)` on axes `(X, Y)`.
    pub fn target_joint(&self) -> Result<JointPmf> {
        Ok(JointPmf::from_channel(
            "X",
            &self.input_pmf,
            "Y",
            &self.target,
        )?)
    }
}

/// `enc = p(u, x~ | x)` and `dec = p(y | y~, u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxP2P {
    pub enc: Kernel,
    pub dec: Kernel,
}

impl AuxP2P {
    pub fn card_u(&self, inst: &P2PInstance) -> Result<usize> {
        split_card(self.enc.n_out(), inst.card_xt(), "encoder output (U, X~)")
    }

    /// The decomposition with `U` fixed to one symbol, `X~` drawn from
    /// `x_tilde(x)` and `Y` from `degrade(y | y~)`.
    pub fn constant_u(x_tilde: &Kernel, degrade: &Kernel) -> Self {
        Self {
            enc: x_tilde.clone(),
            dec: degrade.clone(),
        }
    }

    /// Relabels `U`: new symbol `u` is old symbol `perm[u]`.
    pub fn permute_u(&self, inst: &P2PInstance, perm: &[usize]) -> Result<Self> {
        let cu = self.card_u(inst)?;
        let (nxt, nyt) = (inst.card_xt(), inst.card_yt());
        if perm.len() != cu {
            return Err(RegionError::Invalid("permutation length".into()));
        }
        let enc_perm: Vec<usize> = (0..cu * nxt)
            .map(|k| perm[k / nxt] * nxt + k % nxt)
            .collect();
        let dec_perm: Vec<usize> = (0..nyt * cu)
            .map(|k| (k / cu) * cu + perm[k % cu])
            .collect();
        Ok(Self {
            enc: self.enc.permute_outputs(&enc_perm)?,
            dec: self.dec.permute_inputs(&dec_perm)?,
        })
    }
}

/// Joint of `(X, U, X~, Y~, Y)`.
pub fn p2p_joint(inst: &P2PInstance, aux: &AuxP2P) -> Result<JointPmf> {
    inst.validate()?;
    let cu = aux.card_u(inst)?;
    let (cxt, cyt) = (inst.card_xt(), inst.card_yt());
    if aux.dec.n_out() != inst.card_y() {
        return Err(RegionError::Invalid(format!(
            "decoder outputs {} symbols, target has {}",
            aux.dec.n_out(),
            inst.card_y()
        )));
    }
    Ok(compose(
        "X",
        &inst.input_pmf,
        &[
            Factor::new(&aux.enc, &["X"], &[("U", cu), ("X~", cxt)]),
            Factor::new(&inst.resource, &["X~"], &[("Y~", cyt)]),
            Factor::new(&aux.dec, &["Y~", "U"], &[("Y", inst.card_y())]),
        ],
    )?)
}

pub(crate) const P2P_SLACKS: [&str; 2] = ["R + I(U;Y~) > I(U;XY)", "I(U;Y~) > I(U;X)"];

pub(crate) fn p2p_slacks(j: &JointPmf, rate: f64) -> Result<IndexMap<String, f64>> {
    let iuy = info(j, "U", "Y~", "")?;
    let mut s = IndexMap::new();
    s.insert(P2P_SLACKS[0].into(), rate + iuy - info(j, "U", "XY", "")?);
    s.insert(P2P_SLACKS[1].into(), iuy - info(j, "U", "X", "")?);
    Ok(s)
}

pub(crate) fn marginal_tv(j: &JointPmf, keep: &[&str], target: &JointPmf) -> Result<f64> {
    Ok(total_variation(&j.marginalize(keep)?, target)?)
}

/// Grades `aux` against the point-to-point inner bound at `inst.rate`.
pub fn p2p_inner_check(inst: &P2PInstance, aux: &AuxP2P, eps: f64) -> Result<RegionReport> {
    let j = p2p_joint(inst, aux)?;
    let slacks = p2p_slacks(&j, inst.rate)?;
    let tv = marginal_tv(&j, &["X", "Y"], &inst.target_joint()?)?;
    Ok(RegionReport::graded(slacks, tv, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::{Verdict, DEFAULT_EPS};

    fn erasure_coin() -> Kernel {
        Kernel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap()
    }

    fn bec_to(p: f64) -> P2PInstance {
        P2PInstance::new(
            Pmf::uniform(2).unwrap(),
            Kernel::bsc(p).unwrap(),
            Kernel::bec(0.5).unwrap(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn degrading_construction_is_on_the_boundary() {
        let inst = bec_to(0.25);
        let aux = AuxP2P::constant_u(&Kernel::identity(2), &erasure_coin());
        let r = p2p_inner_check(&inst, &aux, DEFAULT_EPS).unwrap();
        assert_eq!(r.verdict, Verdict::ClosureIn);
        assert!(r.marginal_tv < 1e-12);
        assert!(r.slacks.values().all(|s| s.abs() < 1e-12));
    }

    #[test]
    fn wrong_target_is_out() {
        let inst = bec_to(0.1);
        let aux = AuxP2P::constant_u(&Kernel::identity(2), &erasure_coin());
        let r = p2p_inner_check(&inst, &aux, DEFAULT_EPS).unwrap();
        assert_eq!(r.verdict, Verdict::Out);
        // each of the four cells is off by 0.5 * 0.15
        assert!((r.marginal_tv - 0.3).abs() < 1e-12, "{}", r.marginal_tv);
    }

    #[test]
    fn identity_construction_fails_on_noisy_resource() {
        let mut inst = bec_to(0.0);
        inst.target = Kernel::identity(2);
        inst.rate = 1.0;
        // U = X~ = X, Y = Y~ when not erased
        let enc = Kernel::deterministic(2, 4, |x| x * 2 + x).unwrap();
        let dec = Kernel::from_fn(6, 2, |k, y| {
            let (yt, u) = (k / 2, k % 2);
            let guess = if yt == 2 { u } else { yt };
            if y == guess {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let aux = AuxP2P { enc, dec };
        let r = p2p_inner_check(&inst, &aux, DEFAULT_EPS).unwrap();
        assert_eq!(r.verdict, Verdict::Out);
        assert!(r.slacks[P2P_SLACKS[1]] < 0.0);
    }

    #[test]
    fn u_relabeling_keeps_slacks() {
        let inst = bec_to(0.25);
        let enc = Kernel::from_weights(2, 6, |x, k| 1.0 + (x * 7 + k * 3) as f64 % 5.0).unwrap();
        let dec = Kernel::from_weights(9, 2, |k, y| 1.0 + (k * 5 + y) as f64 % 3.0).unwrap();
        let aux = AuxP2P { enc, dec };
        let a = p2p_inner_check(&inst, &aux, DEFAULT_EPS).unwrap();
        let b = p2p_inner_check(&inst, &aux.permute_u(&inst, &[2, 0, 1]).unwrap(), DEFAULT_EPS)
            .unwrap();
        for (x, y) in a.slacks.values().zip(b.slacks.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.marginal_tv - b.marginal_tv).abs() < 1e-12);
    }
}
