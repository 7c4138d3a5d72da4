use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::p2p::marginal_tv;
use super::{check_rate, info, RegionError, RegionReport, Result};
use crate::probkit::{compose, Factor, JointPmf, Kernel, Pmf};

/// Simulate `target: X -> (Y, Z)` under `input_pmf` from `resource: X~ ->
/// (Y~, Z~)` with shared randomness at `rate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcInstance {
    pub input_pmf: Pmf,
    pub target: Kernel,
    /// `[|Y|, |Z|]`.
    pub target_outputs: [usize; 2],
    pub resource: Kernel,
    /// `[|Y~|, |Z~|]`.
    pub resource_outputs: [usize; 2],
    pub rate: f64,
}

impl BcInstance {
    pub fn validate(&self) -> Result<()> {
        if self.target.n_in() != self.input_pmf.len() {
            return Err(RegionError::Invalid("target rows vs input pmf".into()));
        }
        let [y, z] = self.target_outputs;
        if y * z != self.target.n_out() {
            return Err(RegionError::Invalid(format!(
                "target has {} outputs, declared {y} x {z}",
                self.target.n_out()
            )));
        }
        let [a, b] = self.resource_outputs;
        if a * b != self.resource.n_out() {
            return Err(RegionError::Invalid(format!(
                "resource has {} outputs, declared {a} x {b}",
                self.resource.n_out()
            )));
        }
        check_rate(self.rate, "rate")
    }

    pub fn target_joint(&self) -> Result<JointPmf> {
        let [y, z] = self.target_outputs;
        Ok(compose(
            "X",
            &self.input_pmf,
            &[Factor::new(&self.target, &["X"], &[("Y", y), ("Z", z)])],
        )?)
    }
}

/// `enc = p(u, v, w, x~ | x)`, `dec1 = p(y | y~, u, w)`,
/// `dec2 = p(z | z~, v, w)`; `cards = [|U|, |V|, |W|]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxBc {
    pub enc: Kernel,
    pub cards: [usize; 3],
    pub dec1: Kernel,
    pub dec2: Kernel,
}

/// Joint of `(X, U, V, W, X~, Y~, Z~, Y, Z)`.
pub fn bc_joint(inst: &BcInstance, aux: &AuxBc) -> Result<JointPmf> {
    inst.validate()?;
    let [cu, cv, cw] = aux.cards;
    let [yt, zt] = inst.resource_outputs;
    let [y, z] = inst.target_outputs;
    let xt = inst.resource.n_in();
    if cu * cv * cw * xt != aux.enc.n_out() {
        return Err(RegionError::Invalid(format!(
            "encoder has {} outputs, expected {cu}*{cv}*{cw}*{xt}",
            aux.enc.n_out()
        )));
    }
    Ok(compose(
        "X",
        &inst.input_pmf,
        &[
            Factor::new(&aux.enc, &["X"], &[("U", cu), ("V", cv), ("W", cw), ("X~", xt)]),
            Factor::new(&inst.resource, &["X~"], &[("Y~", yt), ("Z~", zt)]),
            Factor::new(&aux.dec1, &["Y~", "U", "W"], &[("Y", y)]),
            Factor::new(&aux.dec2, &["Z~", "V", "W"], &[("Z", z)]),
        ],
    )?)
}

pub(crate) const BC_SLACKS: [&str; 9] = [
    "I(WU;Y~) > I(UW;X)",
    "R + I(WU;Y~) > I(UW;XYZ)",
    "I(WV;Z~) > I(WV;X)",
    "R + I(WV;Z~) > I(WV;XYZ)",
    "I(WU;Y~) + I(WV;Z~) > I(UW;X) + I(WV;X) + I(U;V|WX)",
    "2R + I(UW;Y~) + I(VW;Z~) > I(UW;XYZ) + I(VW;XYZ) + I(U;V|WXYZ)",
    "min{I(W;Y~), I(W;Z~)} + I(U;Y~|W) + I(V;Z~|W) > I(W;X) + I(U;X|W) + I(V;X|W) + I(U;V|WX)",
    "R + min{I(W;Y~), I(W;Z~)} + I(U;Y~|W) + I(V;Z~|W) > I(W;XYZ) + I(U;XYZ|W) + I(V;XYZ|W) + I(U;V|WXYZ)",
    "R + I(W;YZ|X) + I(UW;Y~) + I(VW;Z~) > I(UW;XYZ) + I(VW;XYZ) + I(U;V|WXYZ)",
];

pub(crate) fn bc_slacks(j: &JointPmf, r: f64) -> Result<IndexMap<String, f64>> {
    let i = |a: &str, b: &str, c: &str| info(j, a, b, c);
    let uw_yt = i("UW", "Y~", "")?;
    let vw_zt = i("VW", "Z~", "")?;
    let uw_x = i("UW", "X", "")?;
    let vw_x = i("VW", "X", "")?;
    let uw_xyz = i("UW", "XYZ", "")?;
    let vw_xyz = i("VW", "XYZ", "")?;
    let uv_wx = i("U", "V", "WX")?;
    let uv_wxyz = i("U", "V", "WXYZ")?;
    let w_min = i("W", "Y~", "")?.min(i("W", "Z~", "")?);
    let private = i("U", "Y~", "W")? + i("V", "Z~", "W")?;
    let values = [
        uw_yt - uw_x,
        r + uw_yt - uw_xyz,
        vw_zt - vw_x,
        r + vw_zt - vw_xyz,
        uw_yt + vw_zt - uw_x - vw_x - uv_wx,
        2.0 * r + uw_yt + vw_zt - uw_xyz - vw_xyz - uv_wxyz,
        w_min + private - i("W", "X", "")? - i("U", "X", "W")? - i("V", "X", "W")? - uv_wx,
        r + w_min + private
            - i("W", "XYZ", "")?
            - i("U", "XYZ", "W")?
            - i("V", "XYZ", "W")?
            - uv_wxyz,
        r + i("W", "YZ", "X")? + uw_yt + vw_zt - uw_xyz - vw_xyz - uv_wxyz,
    ];
    Ok(BC_SLACKS
        .iter()
        .zip(values)
        .map(|(k, v)| (k.to_string(), v))
        .collect())
}

/// Grades `aux` against the broadcast inner bound; the `min` terms are
/// evaluated as written.
pub fn bc_inner_check(inst: &BcInstance, aux: &AuxBc, eps: f64) -> Result<RegionReport> {
    let j = bc_joint(inst, aux)?;
    let slacks = bc_slacks(&j, inst.rate)?;
    let tv = marginal_tv(&j, &["X", "Y", "Z"], &inst.target_joint()?)?;
    Ok(RegionReport::graded(slacks, tv, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::{Verdict, DEFAULT_EPS};

    #[test]
    fn constant_aux_independent_target() {
        let yz = Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let inst = BcInstance {
            input_pmf: Pmf::new(vec![0.6, 0.4]).unwrap(),
            target: Kernel::constant(2, &yz),
            target_outputs: [2, 2],
            resource: Kernel::from_fn(2, 4, |x, k| if k == 3 * x { 1.0 } else { 0.0 }).unwrap(),
            resource_outputs: [2, 2],
            rate: 0.0,
        };
        let aux = AuxBc {
            enc: Kernel::constant(2, &Pmf::point(2, 1).unwrap()),
            cards: [1, 1, 1],
            dec1: Kernel::constant(2, &Pmf::new(vec![0.3, 0.7]).unwrap()),
            dec2: Kernel::from_fn(2, 2, |zt, z| {
                // Z independent of Y~ but correlated with nothing: uniform
                let _ = zt;
                if z == 0 {
                    0.4
                } else {
                    0.6
                }
            })
            .unwrap(),
        };
        let r = bc_inner_check(&inst, &aux, DEFAULT_EPS).unwrap();
        assert_eq!(r.slacks.len(), 9);
        assert!(r.slacks.values().all(|s| s.abs() < 1e-12));
        // target has Y, Z dependent; the product Y x Z cannot match it
        assert_eq!(r.verdict, Verdict::Out);
        let mut inst2 = inst.clone();
        inst2.target = Kernel::constant(
            2,
            &Pmf::new(vec![0.3 * 0.4, 0.3 * 0.6, 0.7 * 0.4, 0.7 * 0.6]).unwrap(),
        );
        let r = bc_inner_check(&inst2, &aux, DEFAULT_EPS).unwrap();
        assert_eq!(r.verdict, Verdict::ClosureIn);
    }
}
