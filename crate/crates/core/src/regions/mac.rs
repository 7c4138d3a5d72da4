use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::p2p::marginal_tv;
use super::{check_rate, info, split_card, RegionError, RegionReport, Result};
use crate::probkit::{Factor, JointPmf, Kernel};

/// Simulate `target: (X, Y) -> Z` under the source law `source` (axes `X`,
/// `Y`) from `resource: (X~, Y~) -> Z~`, with independent shared randomness
/// at `rate1` (first encoder) and `rate2` (second encoder).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacInstance {
    pub source: JointPmf,
    pub target: Kernel,
    pub resource: Kernel,
    /// `[|X~|, |Y~|]`.
    pub resource_inputs: [usize; 2],
    pub rate1: f64,
    pub rate2: f64,
}

impl MacInstance {
    pub fn validate(&self) -> Result<()> {
        if self.source.axis_names() != ["X", "Y"] {
            return Err(RegionError::Invalid(format!(
                "source axes must be [X, Y], got {:?}",
                self.source.axis_names()
            )));
        }
        if self.target.n_in() != self.source.len() {
            return Err(RegionError::Invalid(format!(
                "target has {} input rows, source has {} cells",
                self.target.n_in(),
                self.source.len()
            )));
        }
        let [a, b] = self.resource_inputs;
        if a * b != self.resource.n_in() {
            return Err(RegionError::Invalid(format!(
                "resource has {} input rows, declared inputs {a} x {b}",
                self.resource.n_in()
            )));
        }
        check_rate(self.rate1, "rate1")?;
        check_rate(self.rate2, "rate2")
    }

    pub fn card_x(&self) -> usize {
        self.source.axes()[0].size
    }

    pub fn card_y(&self) -> usize {
        self.source.axes()[1].size
    }

    pub fn card_z(&self) -> usize {
        self.target.n_out()
    }

    pub fn target_joint(&self) -> Result<JointPmf> {
        Ok(self.source.extend(&Factor::new(
            &self.target,
            &["X", "Y"],
            &[("Z", self.card_z())],
        ))?)
    }
}

/// `enc1 = p(u, x~ | x)`, `enc2 = p(v, y~ | y)`, `dec = p(z | z~, u, v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxMac {
    pub enc1: Kernel,
    pub enc2: Kernel,
    pub dec: Kernel,
}

impl AuxMac {
    pub fn cards(&self, inst: &MacInstance) -> Result<(usize, usize)> {
        let [a, b] = inst.resource_inputs;
        Ok((
            split_card(self.enc1.n_out(), a, "first encoder output (U, X~)")?,
            split_card(self.enc2.n_out(), b, "second encoder output (V, Y~)")?,
        ))
    }
}

/// Joint of `(X, Y, U, X~, V, Y~, Z~, Z)`.
pub fn mac_joint(inst: &MacInstance, aux: &AuxMac) -> Result<JointPmf> {
    inst.validate()?;
    let (cu, cv) = aux.cards(inst)?;
    let [a, b] = inst.resource_inputs;
    let j = inst
        .source
        .extend(&Factor::new(&aux.enc1, &["X"], &[("U", cu), ("X~", a)]))?
        .extend(&Factor::new(&aux.enc2, &["Y"], &[("V", cv), ("Y~", b)]))?
        .extend(&Factor::new(
            &inst.resource,
            &["X~", "Y~"],
            &[("Z~", inst.resource.n_out())],
        ))?
        .extend(&Factor::new(&aux.dec, &["Z~", "U", "V"], &[("Z", inst.card_z())]))?;
    Ok(j)
}

pub(crate) const MAC_SLACKS: [&str; 8] = [
    "I(U;VZ~) > I(U;X)",
    "I(V;UZ~) > I(V;Y)",
    "I(UV;Z~) > I(UV;XY)",
    "R1 + I(U;VZ~) > I(U;XYZ)",
    "R2 + I(V;UZ~) > I(V;XYZ)",
    "R1 + R2 + I(UV;Z~) > I(UV;XYZ)",
    "R1 + I(U;VZ~) + I(V;Z~) > I(U;XYZ) + I(V;Y)",
    "R2 + I(V;UZ~) + I(U;Z~) > I(V;XYZ) + I(U;X)",
];

/// Index of the inequality dropped by `disable_v`.
pub(crate) const MAC_V_ONLY: usize = 1;

pub(crate) fn mac_slacks(
    j: &JointPmf,
    r1: f64,
    r2: f64,
    disable_v: bool,
) -> Result<IndexMap<String, f64>> {
    let u_vz = info(j, "U", "VZ~", "")?;
    let v_uz = info(j, "V", "UZ~", "")?;
    let uv_z = info(j, "UV", "Z~", "")?;
    let u_x = info(j, "U", "X", "")?;
    let v_y = info(j, "V", "Y", "")?;
    let u_xyz = info(j, "U", "XYZ", "")?;
    let v_xyz = info(j, "V", "XYZ", "")?;
    let uv_xyz = info(j, "UV", "XYZ", "")?;
    let values = [
        u_vz - u_x,
        v_uz - v_y,
        uv_z - info(j, "UV", "XY", "")?,
        r1 + u_vz - u_xyz,
        r2 + v_uz - v_xyz,
        r1 + r2 + uv_z - uv_xyz,
        r1 + u_vz + info(j, "V", "Z~", "")? - u_xyz - v_y,
        r2 + v_uz + info(j, "U", "Z~", "")? - v_xyz - u_x,
    ];
    Ok(MAC_SLACKS
        .iter()
        .zip(values)
        .enumerate()
        .filter(|(i, _)| !(disable_v && *i == MAC_V_ONLY))
        .map(|(_, (k, v))| (k.to_string(), v))
        .collect())
}

/// Grades `aux` against the MAC inner bound. `disable_v` drops the
/// inequality that only constrains the second auxiliary, as needed when `V`
/// is constant.
pub fn mac_inner_check(
    inst: &MacInstance,
    aux: &AuxMac,
    eps: f64,
    disable_v: bool,
) -> Result<RegionReport> {
    let j = mac_joint(inst, aux)?;
    let slacks = mac_slacks(&j, inst.rate1, inst.rate2, disable_v)?;
    let tv = marginal_tv(&j, &["X", "Y", "Z"], &inst.target_joint()?)?;
    Ok(RegionReport::graded(slacks, tv, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{Axis, Pmf};
    use crate::regions::{Verdict, DEFAULT_EPS};

    #[test]
    fn constant_aux_independent_target() {
        let source = JointPmf::new(
            vec![Axis::new("X", 2), Axis::new("Y", 2)],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let z = Pmf::new(vec![0.3, 0.7]).unwrap();
        let inst = MacInstance {
            source,
            target: Kernel::constant(4, &z),
            resource: Kernel::from_fn(4, 2, |i, j| if (i % 2 == 1) == (j == 1) { 1.0 } else { 0.0 })
                .unwrap(),
            resource_inputs: [2, 2],
            rate1: 0.0,
            rate2: 0.0,
        };
        let aux = AuxMac {
            enc1: Kernel::constant(2, &Pmf::point(2, 0).unwrap()),
            enc2: Kernel::constant(2, &Pmf::point(2, 1).unwrap()),
            dec: Kernel::constant(2, &z),
        };
        let r = mac_inner_check(&inst, &aux, DEFAULT_EPS, false).unwrap();
        assert_eq!(r.verdict, Verdict::ClosureIn);
        assert_eq!(r.slacks.len(), 8);
        assert!(r.slacks.values().all(|s| s.abs() < 1e-12));
        assert_eq!(mac_inner_check(&inst, &aux, DEFAULT_EPS, true).unwrap().slacks.len(), 7);
    }
}
