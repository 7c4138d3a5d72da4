use rand_chacha::ChaCha8Rng;

use super::engine::{LinH, Model, Schedule};
use super::{best_of, Result, SearchConfig, SearchResult};
use crate::probkit::{Kernel, Pmf};
use crate::regions::{
    bc_inner_check, mac_inner_check, p2p_inner_check, AuxBc, AuxMac, AuxP2P, BcInstance, MacInstance,
    P2PInstance, RegionReport, Verdict, DEFAULT_EPS,
};

/// Weight of the marginal mismatch in a search value: `min slack -
/// MARGINAL_PENALTY * marginal_tv`.
pub const MARGINAL_PENALTY: f64 = 1e3;

/// Value of a graded report.
pub(crate) fn report_value(r: &RegionReport) -> f64 {
    r.min_slack() - MARGINAL_PENALTY * r.marginal_tv
}

fn inner_schedule(cfg: &SearchConfig) -> Schedule {
    Schedule {
        iters: cfg.max_iters,
        step: cfg.step.initial,
        decay: cfg.step.decay,
        tol: cfg.tol,
        lambda: (10.0, 1e4),
        tau: (0.05, 0.002),
    }
}

fn polish_schedule(cfg: &SearchConfig) -> Schedule {
    Schedule {
        iters: cfg.max_iters / 4,
        step: cfg.step.initial / 10.0,
        decay: cfg.step.decay,
        tol: cfg.tol,
        lambda: (1e4, 1e4),
        tau: (0.002, 0.002),
    }
}

/// Runs one random restart: ascent, repair, then two polish rounds; returns
/// the best exactly evaluated candidate.
fn descend<P>(
    m: &mut Model,
    rng: &mut ChaCha8Rng,
    cfg: &SearchConfig,
    repair: &[usize],
    eval: &dyn Fn(&Model) -> Option<(f64, P)>,
) -> Option<(f64, P)> {
    m.randomize(rng, 2.0);
    m.ascend(&inner_schedule(cfg));
    let mut best: Option<(f64, P)> = None;
    for round in 0..3 {
        if round > 0 {
            m.ascend(&polish_schedule(cfg));
        }
        m.repair_cycle(repair, 3);
        if let Some((v, p)) = eval(m) {
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, p));
            }
        }
    }
    best
}

fn kernel(m: &Model, f: usize) -> Option<Kernel> {
    let (i, o) = m.dims(f);
    Kernel::from_flat(i, o, m.table(f).to_vec()).ok()
}

fn finish<P>(found: Option<(usize, f64, P, Vec<f64>)>, fallback: impl FnOnce() -> Result<(f64, P)>, strict: impl Fn(&P) -> bool) -> Result<SearchResult<P>> {
    match found {
        Some((best_restart, v, p, trace)) => Ok(SearchResult {
            best_value: v,
            converged: strict(&p),
            best_point: p,
            trace,
            best_restart,
        }),
        None => {
            let (v, p) = fallback()?;
            Ok(SearchResult {
                best_value: v,
                converged: false,
                best_point: p,
                trace: Vec::new(),
                best_restart: 0,
            })
        }
    }
}

/// Symbol `x mod n` as a point-mass row.
fn fold(nx: usize, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; nx * n];
    for x in 0..nx {
        t[x * n + x % n] = 1.0;
    }
    t
}

/// Searches `(enc, dec)` maximizing the minimum inner-bound slack minus
/// [`MARGINAL_PENALTY`] times the marginal mismatch. Restart 0 is the
/// constant-`U` construction with a repaired decoder; `|U|` defaults to
/// `|X| |Y| + 2`.
pub fn find_feasible_aux_p2p(inst: &P2PInstance, cfg: &SearchConfig) -> Result<SearchResult<AuxP2P>> {
    cfg.validate()?;
    inst.validate()?;
    let (nx, ny, nxt, nyt) = (inst.card_x(), inst.card_y(), inst.card_xt(), inst.card_yt());
    let eval_aux = |aux: AuxP2P| -> Option<(f64, AuxP2P)> {
        let r = p2p_inner_check(inst, &aux, DEFAULT_EPS).ok()?;
        Some((report_value(&r), aux))
    };
    let strict = |a: &AuxP2P| {
        p2p_inner_check(inst, a, DEFAULT_EPS).is_ok_and(|r| r.verdict == Verdict::StrictIn)
    };
    if nx == 1 || ny == 1 {
        let aux = AuxP2P {
            enc: Kernel::deterministic(nx, nxt, |_| 0)?,
            dec: Kernel::constant(nyt, &Pmf::new(inst.target.row(0).to_vec())?),
        };
        let r = p2p_inner_check(inst, &aux, DEFAULT_EPS)?;
        return Ok(SearchResult {
            best_value: report_value(&r),
            converged: r.verdict == Verdict::StrictIn,
            best_point: aux,
            trace: vec![report_value(&r)],
            best_restart: 0,
        });
    }
    let cu = cfg.card_u.unwrap_or(nx * ny + 2);
    let build = || {
        let mut m = Model::new(&[("X", nx), ("U", cu), ("X~", nxt), ("Y~", nyt), ("Y", ny)]);
        m.fixed(&[], &["X"], inst.input_pmf.probs().to_vec());
        let enc = m.free(&["X"], &["U", "X~"], vec![1.0 / (cu * nxt) as f64; nx * cu * nxt]);
        m.fixed(&["X~"], &["Y~"], inst.resource.as_flat().to_vec());
        let dec = m.free(&["Y~", "U"], &["Y"], vec![1.0 / ny as f64; nyt * cu * ny]);
        let mut t = m.info(1.0, &["U"], &["Y~"], &[]);
        t.extend(m.info(-1.0, &["U"], &["X", "Y"], &[]));
        m.add_slack(LinH { constant: inst.rate, terms: t });
        let mut t = m.info(1.0, &["U"], &["Y~"], &[]);
        t.extend(m.info(-1.0, &["U"], &["X"], &[]));
        m.add_slack(LinH { constant: 0.0, terms: t });
        m.add_target(&["X", "Y"], inst.target_joint().expect("validated").table().to_vec());
        (m, enc, dec)
    };
    let to_aux = |m: &Model, enc: usize, dec: usize| -> Option<(f64, AuxP2P)> {
        eval_aux(AuxP2P {
            enc: kernel(m, enc)?,
            dec: kernel(m, dec)?,
        })
    };
    let found = best_of(cfg, cfg.restarts + 1, |i, rng| {
        let (mut m, enc, dec) = build();
        if i == 0 {
            let mut t = vec![0.0; nx * cu * nxt];
            let f = fold(nx, nxt);
            for x in 0..nx {
                t[x * cu * nxt..x * cu * nxt + nxt].copy_from_slice(&f[x * nxt..(x + 1) * nxt]);
            }
            m.set_table(enc, t);
            m.repair_cycle(&[dec, enc], 3);
            return to_aux(&m, enc, dec);
        }
        descend(&mut m, rng, cfg, &[dec, enc], &|m| to_aux(m, enc, dec))
    });
    finish(
        found,
        || {
            let (m, enc, dec) = build();
            to_aux(&m, enc, dec).ok_or_else(|| super::SearchError::Config("no evaluable point".into()))
        },
        strict,
    )
}

/// MAC analogue of [`find_feasible_aux_p2p`] over `(enc1, enc2, dec)` with
/// all eight inequalities; `|U|` and `|V|` default to `|X| |Y| + 2`.
pub fn find_feasible_aux_mac(inst: &MacInstance, cfg: &SearchConfig) -> Result<SearchResult<AuxMac>> {
    cfg.validate()?;
    inst.validate()?;
    let (nx, ny, nz) = (inst.card_x(), inst.card_y(), inst.card_z());
    let [nxt, nyt] = inst.resource_inputs;
    let nzt = inst.resource.n_out();
    let eval_aux = |aux: AuxMac| -> Option<(f64, AuxMac)> {
        let r = mac_inner_check(inst, &aux, DEFAULT_EPS, false).ok()?;
        Some((report_value(&r), aux))
    };
    let strict = |a: &AuxMac| {
        mac_inner_check(inst, a, DEFAULT_EPS, false).is_ok_and(|r| r.verdict == Verdict::StrictIn)
    };
    let default = nx * ny + 2;
    let (cu, cv) = (cfg.card_u.unwrap_or(default), cfg.card_v.unwrap_or(default));
    let build = || {
        let mut m = Model::new(&[
            ("X", nx),
            ("Y", ny),
            ("U", cu),
            ("X~", nxt),
            ("V", cv),
            ("Y~", nyt),
            ("Z~", nzt),
            ("Z", nz),
        ]);
        m.fixed(&[], &["X", "Y"], inst.source.table().to_vec());
        let e1 = m.free(&["X"], &["U", "X~"], vec![1.0 / (cu * nxt) as f64; nx * cu * nxt]);
        let e2 = m.free(&["Y"], &["V", "Y~"], vec![1.0 / (cv * nyt) as f64; ny * cv * nyt]);
        m.fixed(&["X~", "Y~"], &["Z~"], inst.resource.as_flat().to_vec());
        let dec = m.free(&["Z~", "U", "V"], &["Z"], vec![1.0 / nz as f64; nzt * cu * cv * nz]);
        let (r1, r2) = (inst.rate1, inst.rate2);
        type Term<'a> = (f64, &'a [&'a str], &'a [&'a str], &'a [&'a str]);
        let rows: [(f64, Vec<Term>); 8] = [
            (0.0, vec![(1.0, &["U"], &["V", "Z~"], &[]), (-1.0, &["U"], &["X"], &[])]),
            (0.0, vec![(1.0, &["V"], &["U", "Z~"], &[]), (-1.0, &["V"], &["Y"], &[])]),
            (0.0, vec![(1.0, &["U", "V"], &["Z~"], &[]), (-1.0, &["U", "V"], &["X", "Y"], &[])]),
            (r1, vec![(1.0, &["U"], &["V", "Z~"], &[]), (-1.0, &["U"], &["X", "Y", "Z"], &[])]),
            (r2, vec![(1.0, &["V"], &["U", "Z~"], &[]), (-1.0, &["V"], &["X", "Y", "Z"], &[])]),
            (r1 + r2, vec![(1.0, &["U", "V"], &["Z~"], &[]), (-1.0, &["U", "V"], &["X", "Y", "Z"], &[])]),
            (
                r1,
                vec![
                    (1.0, &["U"], &["V", "Z~"], &[]),
                    (1.0, &["V"], &["Z~"], &[]),
                    (-1.0, &["U"], &["X", "Y", "Z"], &[]),
                    (-1.0, &["V"], &["Y"], &[]),
                ],
            ),
            (
                r2,
                vec![
                    (1.0, &["V"], &["U", "Z~"], &[]),
                    (1.0, &["U"], &["Z~"], &[]),
                    (-1.0, &["V"], &["X", "Y", "Z"], &[]),
                    (-1.0, &["U"], &["X"], &[]),
                ],
            ),
        ];
        for (c, terms) in rows {
            let mut t = Vec::new();
            for (k, a, b, g) in terms {
                t.extend(m.info(k, a, b, g));
            }
            m.add_slack(LinH { constant: c, terms: t });
        }
        m.add_target(&["X", "Y", "Z"], inst.target_joint().expect("validated").table().to_vec());
        (m, e1, e2, dec)
    };
    let to_aux = |m: &Model, e1: usize, e2: usize, dec: usize| -> Option<(f64, AuxMac)> {
        eval_aux(AuxMac {
            enc1: kernel(m, e1)?,
            enc2: kernel(m, e2)?,
            dec: kernel(m, dec)?,
        })
    };
    let found = best_of(cfg, cfg.restarts + 1, |i, rng| {
        let (mut m, e1, e2, dec) = build();
        if i == 0 {
            m.set_table(e1, spread_first(nx, cu, &fold(nx, nxt), nxt));
            m.set_table(e2, spread_first(ny, cv, &fold(ny, nyt), nyt));
            m.repair_cycle(&[dec], 1);
            return to_aux(&m, e1, e2, dec);
        }
        descend(&mut m, rng, cfg, &[dec, e1, e2], &|m| to_aux(m, e1, e2, dec))
    });
    finish(
        found,
        || {
            let (m, e1, e2, dec) = build();
            to_aux(&m, e1, e2, dec).ok_or_else(|| super::SearchError::Config("no evaluable point".into()))
        },
        strict,
    )
}

/// Encoder table over `(aux, resource input)` that puts the auxiliary at
/// symbol 0 and the resource input at `inner`.
fn spread_first(n_in: usize, card: usize, inner: &[f64], n_res: usize) -> Vec<f64> {
    let mut t = vec![0.0; n_in * card * n_res];
    for x in 0..n_in {
        t[x * card * n_res..x * card * n_res + n_res].copy_from_slice(&inner[x * n_res..(x + 1) * n_res]);
    }
    t
}

/// Broadcast analogue of [`find_feasible_aux_p2p`] over `(enc, dec1, dec2)`
/// with all nine inequalities. Each `min` term is split into its two
/// branches for the optimizer. `|U|`, `|V|` and `|W|` default to
/// `|X| |Y| + 2`.
pub fn find_feasible_aux_bc(inst: &BcInstance, cfg: &SearchConfig) -> Result<SearchResult<AuxBc>> {
    cfg.validate()?;
    inst.validate()?;
    let nx = inst.input_pmf.len();
    let [ny, nz] = inst.target_outputs;
    let [nyt, nzt] = inst.resource_outputs;
    let nxt = inst.resource.n_in();
    let eval_aux = |aux: AuxBc| -> Option<(f64, AuxBc)> {
        let r = bc_inner_check(inst, &aux, DEFAULT_EPS).ok()?;
        Some((report_value(&r), aux))
    };
    let strict = |a: &AuxBc| bc_inner_check(inst, a, DEFAULT_EPS).is_ok_and(|r| r.verdict == Verdict::StrictIn);
    let default = nx * ny + 2;
    let cards = [
        cfg.card_u.unwrap_or(default),
        cfg.card_v.unwrap_or(default),
        cfg.card_w.unwrap_or(default),
    ];
    let [cu, cv, cw] = cards;
    let n_enc = cu * cv * cw * nxt;
    let build = || {
        let mut m = Model::new(&[
            ("X", nx),
            ("U", cu),
            ("V", cv),
            ("W", cw),
            ("X~", nxt),
            ("Y~", nyt),
            ("Z~", nzt),
            ("Y", ny),
            ("Z", nz),
        ]);
        m.fixed(&[], &["X"], inst.input_pmf.probs().to_vec());
        let enc = m.free(&["X"], &["U", "V", "W", "X~"], vec![1.0 / n_enc as f64; nx * n_enc]);
        m.fixed(&["X~"], &["Y~", "Z~"], inst.resource.as_flat().to_vec());
        let d1 = m.free(&["Y~", "U", "W"], &["Y"], vec![1.0 / ny as f64; nyt * cu * cw * ny]);
        let d2 = m.free(&["Z~", "V", "W"], &["Z"], vec![1.0 / nz as f64; nzt * cv * cw * nz]);
        let r = inst.rate;
        let xyz: &[&str] = &["X", "Y", "Z"];
        type Term<'a> = (f64, &'a [&'a str], &'a [&'a str], &'a [&'a str]);
        let uw_yt: Term = (1.0, &["U", "W"], &["Y~"], &[]);
        let vw_zt: Term = (1.0, &["V", "W"], &["Z~"], &[]);
        let uw_xyz: Term = (-1.0, &["U", "W"], xyz, &[]);
        let vw_xyz: Term = (-1.0, &["V", "W"], xyz, &[]);
        let uv_wx: Term = (-1.0, &["U"], &["V"], &["W", "X"]);
        let uv_wxyz: Term = (-1.0, &["U"], &["V"], &["W", "X", "Y", "Z"]);
        let private: [Term; 2] = [(1.0, &["U"], &["Y~"], &["W"]), (1.0, &["V"], &["Z~"], &["W"])];
        let mut rows: Vec<(f64, Vec<Term>)> = vec![
            (0.0, vec![uw_yt, (-1.0, &["U", "W"], &["X"], &[])]),
            (r, vec![uw_yt, uw_xyz]),
            (0.0, vec![vw_zt, (-1.0, &["V", "W"], &["X"], &[])]),
            (r, vec![vw_zt, vw_xyz]),
            (
                0.0,
                vec![uw_yt, vw_zt, (-1.0, &["U", "W"], &["X"], &[]), (-1.0, &["V", "W"], &["X"], &[]), uv_wx],
            ),
            (2.0 * r, vec![uw_yt, vw_zt, uw_xyz, vw_xyz, uv_wxyz]),
            (r, vec![(1.0, &["W"], &["Y", "Z"], &["X"]), uw_yt, vw_zt, uw_xyz, vw_xyz, uv_wxyz]),
        ];
        for w_branch in [&["Y~"], &["Z~"]] {
            let w_term: Term = (1.0, &["W"], w_branch, &[]);
            rows.push((
                0.0,
                vec![
                    w_term,
                    private[0],
                    private[1],
                    (-1.0, &["W"], &["X"], &[]),
                    (-1.0, &["U"], &["X"], &["W"]),
                    (-1.0, &["V"], &["X"], &["W"]),
                    uv_wx,
                ],
            ));
            rows.push((
                r,
                vec![
                    w_term,
                    private[0],
                    private[1],
                    (-1.0, &["W"], xyz, &[]),
                    (-1.0, &["U"], xyz, &["W"]),
                    (-1.0, &["V"], xyz, &["W"]),
                    uv_wxyz,
                ],
            ));
        }
        for (c, terms) in rows {
            let mut t = Vec::new();
            for (k, a, b, g) in terms {
                t.extend(m.info(k, a, b, g));
            }
            m.add_slack(LinH { constant: c, terms: t });
        }
        m.add_target(xyz, inst.target_joint().expect("validated").table().to_vec());
        (m, enc, d1, d2)
    };
    let to_aux = |m: &Model, enc: usize, d1: usize, d2: usize| -> Option<(f64, AuxBc)> {
        eval_aux(AuxBc {
            enc: kernel(m, enc)?,
            cards,
            dec1: kernel(m, d1)?,
            dec2: kernel(m, d2)?,
        })
    };
    let found = best_of(cfg, cfg.restarts + 1, |i, rng| {
        let (mut m, enc, d1, d2) = build();
        if i == 0 {
            m.set_table(enc, spread_first(nx, cu * cv * cw, &fold(nx, nxt), nxt));
            m.repair_cycle(&[d1, d2], 4);
            return to_aux(&m, enc, d1, d2);
        }
        descend(&mut m, rng, cfg, &[d1, d2, enc], &|m| to_aux(m, enc, d1, d2))
    });
    finish(
        found,
        || {
            let (m, enc, d1, d2) = build();
            to_aux(&m, enc, d1, d2).ok_or_else(|| super::SearchError::Config("no evaluable point".into()))
        },
        strict,
    )
}
