//! Reference evaluators written as plain nested loops, independent of
//! [`crate::probkit`]'s joint machinery. Used to cross-check every slack.

use std::collections::HashMap;

use super::{AuxBc, AuxMac, AuxP2P, BcInstance, MacInstance, P2PInstance};

fn cat<'a>(x: &[&'a str], y: &[&'a str]) -> Vec<&'a str> {
    x.iter().chain(y).copied().collect()
}

/// A joint law as a map from symbol tuples to probabilities.
pub struct NaiveJoint {
    names: Vec<&'static str>,
    cells: Vec<(Vec<usize>, f64)>,
}

impl NaiveJoint {
    fn pos(&self, v: &str) -> usize {
        self.names.iter().position(|n| *n == v).expect("known variable")
    }

    /// Entropy of the listed variables, in bits.
    pub fn h(&self, vars: &[&str]) -> f64 {
        let idx: Vec<usize> = vars.iter().map(|v| self.pos(v)).collect();
        let mut m: HashMap<Vec<usize>, f64> = HashMap::new();
        for (t, p) in &self.cells {
            *m.entry(idx.iter().map(|&i| t[i]).collect()).or_insert(0.0) += p;
        }
        m.values().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum::<f64>() / std::f64::consts::LN_2
    }

    /// `I(A;B|C)` in bits.
    pub fn i(&self, a: &[&str], b: &[&str], c: &[&str]) -> f64 {
        let abc: Vec<&str> = cat(&cat(a, b), c);
        self.h(&cat(a, c)) + self.h(&cat(b, c)) - self.h(&abc) - self.h(c)
    }

    /// Unhalved L1 distance between the marginal on `vars` and `target`,
    /// given as a function of the symbol tuple.
    pub fn l1(&self, vars: &[&str], target: impl Fn(&[usize]) -> f64, sizes: &[usize]) -> f64 {
        let idx: Vec<usize> = vars.iter().map(|v| self.pos(v)).collect();
        let mut m: HashMap<Vec<usize>, f64> = HashMap::new();
        for (t, p) in &self.cells {
            *m.entry(idx.iter().map(|&i| t[i]).collect()).or_insert(0.0) += p;
        }
        let mut total = 0.0;
        let mut t = vec![0usize; sizes.len()];
        'outer: loop {
            total += (m.get(&t).copied().unwrap_or(0.0) - target(&t)).abs();
            for k in (0..t.len()).rev() {
                t[k] += 1;
                if t[k] < sizes[k] {
                    continue 'outer;
                }
                t[k] = 0;
            }
            break;
        }
        total
    }
}

pub fn p2p_joint(inst: &P2PInstance, aux: &AuxP2P) -> NaiveJoint {
    let (nx, ny, nxt, nyt) = (inst.card_x(), inst.card_y(), inst.card_xt(), inst.card_yt());
    let nu = aux.enc.n_out() / nxt;
    let mut cells = Vec::new();
    for x in 0..nx {
        for u in 0..nu {
            for xt in 0..nxt {
                for yt in 0..nyt {
                    for y in 0..ny {
                        let p = inst.input_pmf.probs()[x]
                            * aux.enc.get(x, u * nxt + xt)
                            * inst.resource.get(xt, yt)
                            * aux.dec.get(yt * nu + u, y);
                        cells.push((vec![x, u, xt, yt, y], p));
                    }
                }
            }
        }
    }
    NaiveJoint {
        names: vec!["X", "U", "X~", "Y~", "Y"],
        cells,
    }
}

/// Slacks and marginal L1 of the point-to-point check.
pub fn p2p_slacks(inst: &P2PInstance, aux: &AuxP2P) -> (Vec<f64>, f64) {
    let j = p2p_joint(inst, aux);
    let iuy = j.i(&["U"], &["Y~"], &[]);
    let s = vec![inst.rate + iuy - j.i(&["U"], &["X", "Y"], &[]), iuy - j.i(&["U"], &["X"], &[])];
    let tv = j.l1(
        &["X", "Y"],
        |t| inst.input_pmf.probs()[t[0]] * inst.target.get(t[0], t[1]),
        &[inst.card_x(), inst.card_y()],
    );
    (s, tv)
}

pub fn mac_joint(inst: &MacInstance, aux: &AuxMac) -> NaiveJoint {
    let (nx, ny, nz) = (inst.card_x(), inst.card_y(), inst.card_z());
    let [nxt, nyt] = inst.resource_inputs;
    let nzt = inst.resource.n_out();
    let (nu, nv) = (aux.enc1.n_out() / nxt, aux.enc2.n_out() / nyt);
    let mut cells = Vec::new();
    for x in 0..nx {
        for y in 0..ny {
            let pxy = inst.source.table()[x * ny + y];
            for u in 0..nu {
                for xt in 0..nxt {
                    for v in 0..nv {
                        for yt in 0..nyt {
                            for zt in 0..nzt {
                                for z in 0..nz {
                                    let p = pxy
                                        * aux.enc1.get(x, u * nxt + xt)
                                        * aux.enc2.get(y, v * nyt + yt)
                                        * inst.resource.get(xt * nyt + yt, zt)
                                        * aux.dec.get((zt * nu + u) * nv + v, z);
                                    cells.push((vec![x, y, u, xt, v, yt, zt, z], p));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    NaiveJoint {
        names: vec!["X", "Y", "U", "X~", "V", "Y~", "Z~", "Z"],
        cells,
    }
}

/// All eight MAC slacks in order, and the marginal L1.
pub fn mac_slacks(inst: &MacInstance, aux: &AuxMac) -> (Vec<f64>, f64) {
    let j = mac_joint(inst, aux);
    let (r1, r2) = (inst.rate1, inst.rate2);
    let xyz: &[&str] = &["X", "Y", "Z"];
    let s = vec![
        j.i(&["U"], &["V", "Z~"], &[]) - j.i(&["U"], &["X"], &[]),
        j.i(&["V"], &["U", "Z~"], &[]) - j.i(&["V"], &["Y"], &[]),
        j.i(&["U", "V"], &["Z~"], &[]) - j.i(&["U", "V"], &["X", "Y"], &[]),
        r1 + j.i(&["U"], &["V", "Z~"], &[]) - j.i(&["U"], xyz, &[]),
        r2 + j.i(&["V"], &["U", "Z~"], &[]) - j.i(&["V"], xyz, &[]),
        r1 + r2 + j.i(&["U", "V"], &["Z~"], &[]) - j.i(&["U", "V"], xyz, &[]),
        r1 + j.i(&["U"], &["V", "Z~"], &[]) + j.i(&["V"], &["Z~"], &[]) - j.i(&["U"], xyz, &[]) - j.i(&["V"], &["Y"], &[]),
        r2 + j.i(&["V"], &["U", "Z~"], &[]) + j.i(&["U"], &["Z~"], &[]) - j.i(&["V"], xyz, &[]) - j.i(&["U"], &["X"], &[]),
    ];
    let ny = inst.card_y();
    let nz = inst.card_z();
    let tv = j.l1(
        xyz,
        |t| inst.source.table()[t[0] * ny + t[1]] * inst.target.get(t[0] * ny + t[1], t[2]),
        &[inst.card_x(), ny, nz],
    );
    (s, tv)
}

pub fn bc_joint(inst: &BcInstance, aux: &AuxBc) -> NaiveJoint {
    let nx = inst.input_pmf.len();
    let [ny, nz] = inst.target_outputs;
    let [nyt, nzt] = inst.resource_outputs;
    let nxt = inst.resource.n_in();
    let [nu, nv, nw] = aux.cards;
    let mut cells = Vec::new();
    for x in 0..nx {
        for u in 0..nu {
            for v in 0..nv {
                for w in 0..nw {
                    for xt in 0..nxt {
                        let pe = inst.input_pmf.probs()[x] * aux.enc.get(x, ((u * nv + v) * nw + w) * nxt + xt);
                        for yt in 0..nyt {
                            for zt in 0..nzt {
                                let pr = pe * inst.resource.get(xt, yt * nzt + zt);
                                for y in 0..ny {
                                    for z in 0..nz {
                                        let p = pr
                                            * aux.dec1.get((yt * nu + u) * nw + w, y)
                                            * aux.dec2.get((zt * nv + v) * nw + w, z);
                                        cells.push((vec![x, u, v, w, xt, yt, zt, y, z], p));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    NaiveJoint {
        names: vec!["X", "U", "V", "W", "X~", "Y~", "Z~", "Y", "Z"],
        cells,
    }
}

/// All nine broadcast slacks in order, and the marginal L1.
pub fn bc_slacks(inst: &BcInstance, aux: &AuxBc) -> (Vec<f64>, f64) {
    let j = bc_joint(inst, aux);
    let r = inst.rate;
    let xyz: &[&str] = &["X", "Y", "Z"];
    let uw_yt = j.i(&["U", "W"], &["Y~"], &[]);
    let vw_zt = j.i(&["V", "W"], &["Z~"], &[]);
    let uw_x = j.i(&["U", "W"], &["X"], &[]);
    let vw_x = j.i(&["V", "W"], &["X"], &[]);
    let uw_xyz = j.i(&["U", "W"], xyz, &[]);
    let vw_xyz = j.i(&["V", "W"], xyz, &[]);
    let uv_wx = j.i(&["U"], &["V"], &["W", "X"]);
    let uv_wxyz = j.i(&["U"], &["V"], &["W", "X", "Y", "Z"]);
    let wmin = j.i(&["W"], &["Y~"], &[]).min(j.i(&["W"], &["Z~"], &[]));
    let private = j.i(&["U"], &["Y~"], &["W"]) + j.i(&["V"], &["Z~"], &["W"]);
    let s = vec![
        uw_yt - uw_x,
        r + uw_yt - uw_xyz,
        vw_zt - vw_x,
        r + vw_zt - vw_xyz,
        uw_yt + vw_zt - uw_x - vw_x - uv_wx,
        2.0 * r + uw_yt + vw_zt - uw_xyz - vw_xyz - uv_wxyz,
        wmin + private - j.i(&["W"], &["X"], &[]) - j.i(&["U"], &["X"], &["W"]) - j.i(&["V"], &["X"], &["W"]) - uv_wx,
        r + wmin + private - j.i(&["W"], xyz, &[]) - j.i(&["U"], xyz, &["W"]) - j.i(&["V"], xyz, &["W"]) - uv_wxyz,
        r + j.i(&["W"], &["Y", "Z"], &["X"]) + uw_yt + vw_zt - uw_xyz - vw_xyz - uv_wxyz,
    ];
    let [ny, nz] = inst.target_outputs;
    let tv = j.l1(
        xyz,
        |t| inst.input_pmf.probs()[t[0]] * inst.target.get(t[0], t[1] * nz + t[2]),
        &[inst.input_pmf.len(), ny, nz],
    );
    (s, tv)
}
