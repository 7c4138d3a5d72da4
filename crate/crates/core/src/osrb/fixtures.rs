//! Small instances with known behaviour under the binning scheme.

use super::casestudy::{bec_bsc_instance, degrading_aux};
use super::Result;
use crate::probkit::{Kernel, Pmf};
use crate::regions::{p2p_joint, AuxP2P, P2PInstance};

/// Noiseless binary resource, target equal to the resource, `U = X~ = X`
/// and `Y = Y~`. The induced law is exact at every blocklength.
pub fn noiseless_identity(input: Pmf) -> Result<(P2PInstance, AuxP2P)> {
    let inst = P2PInstance::new(input, Kernel::identity(2), Kernel::identity(2), 0.0)?;
    let enc = Kernel::deterministic(2, 4, |x| x * 2 + x)?;
    let dec = Kernel::deterministic(4, 2, |k| k / 2)?;
    Ok((inst, AuxP2P { enc, dec }))
}

/// BSC(p) from BEC(e) by degrading, with a constant `U`.
pub fn bec_bsc_degrading(e: f64, p: f64) -> Result<(P2PInstance, AuxP2P)> {
    Ok((bec_bsc_instance(e, p, 0.0)?, degrading_aux(e, p)?))
}

/// Binning rates `(rate_g, rate_w)` for [`ternary_convergence`]. Both give
/// exact bin counts at even blocklengths.
pub const TERNARY_RATES: (f64, f64) = (0.5, 0.5);

/// Uniform binary `X`; ternary `U` with `p(u|0) = (0.6, 0.2, 0.2)` and
/// `p(u|1) = (0.2, 0.2, 0.6)`, sent as `X~ = U` over a ternary symmetric
/// channel with error 0.02; `Y ~ Bern(0.1, 0.5, 0.9)` indexed by `U`. The
/// target is the induced BSC(0.34) and the rate is 0.5. At
/// [`TERNARY_RATES`] every binning constraint holds with more than 0.3 bit
/// to spare.
pub fn ternary_convergence() -> Result<(P2PInstance, AuxP2P)> {
    let pu = [[0.6, 0.2, 0.2], [0.2, 0.2, 0.6]];
    let enc = Kernel::from_fn(2, 9, |x, k| if k / 3 == k % 3 { pu[x][k / 3] } else { 0.0 })?;
    let resource = Kernel::from_fn(3, 3, |a, b| if a == b { 0.98 } else { 0.01 })?;
    let dec = Kernel::from_fn(9, 2, |k, y| {
        let p1 = [0.1, 0.5, 0.9][k % 3];
        if y == 1 {
            p1
        } else {
            1.0 - p1
        }
    })?;
    let aux = AuxP2P { enc, dec };
    let probe = P2PInstance::new(Pmf::uniform(2)?, Kernel::identity(2), resource.clone(), 0.5)?;
    let target = p2p_joint(&probe, &aux)?.conditional(&["Y"], &["X"])?;
    Ok((P2PInstance::new(Pmf::uniform(2)?, target, resource, 0.5)?, aux))
}

/// `(R + R~ - H(U|X), H(U|Y~) - R - R~, R~ - H(U|XY))`: all negative when
/// the binning rates are strictly admissible.
pub fn binning_margins(inst: &P2PInstance, aux: &AuxP2P, rate_g: f64, rate_w: f64) -> Result<[f64; 3]> {
    let j = p2p_joint(inst, aux)?;
    let h = |a: &[&str], b: &[&str]| -> Result<f64> { Ok(j.entropy(&[a, b].concat())? - j.entropy(b)?) };
    let total = rate_g + rate_w;
    Ok([
        total - h(&["U"], &["X"])?,
        h(&["U"], &["Y~"])? - total,
        rate_g - h(&["U"], &["X", "Y"])?,
    ])
}
