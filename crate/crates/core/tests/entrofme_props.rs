use std::collections::BTreeMap;

use chansim::entrofme::{
    eval_expr, fixtures, fm_eliminate, parse_expr, parse_system, EntropyExpr, FmOptions,
    IneqSystem, VarSet,
};
use chansim::probkit::{Axis, JointPmf};
use proptest::prelude::*;

const LABELS: [&str; 4] = ["U", "X", "Y", "Y~"];

fn subset() -> impl Strategy<Value = Vec<&'static str>> {
    (1usize..16).prop_map(|m| {
        LABELS
            .iter()
            .enumerate()
            .filter(|(i, _)| m >> i & 1 == 1)
            .map(|(_, l)| *l)
            .collect()
    })
}

/// One term of an expression as source text.
fn term() -> impl Strategy<Value = String> {
    let coeff = prop_oneof![
        Just(String::new()),
        (1i32..5).prop_map(|c| format!("{c} ")),
        (1i32..5, 2i32..6).prop_map(|(a, b)| format!("{a}/{b} ")),
    ];
    let item = prop_oneof![
        subset().prop_map(|s| format!("H({})", s.concat())),
        (subset(), subset()).prop_map(|(a, b)| format!("H({}|{})", a.concat(), b.concat())),
        (subset(), subset(), subset()).prop_map(|(a, b, c)| format!(
            "I({};{}|{})",
            a.concat(),
            b.concat(),
            c.concat()
        )),
        (1i32..4).prop_map(|c| c.to_string()),
    ];
    (coeff, item).prop_map(|(c, i)| if i.starts_with(['H', 'I']) { c + &i } else { i })
}

fn expr_text() -> impl Strategy<Value = String> {
    prop::collection::vec((any::<bool>(), term()), 1..6).prop_map(|ts| {
        let mut s = String::new();
        for (k, (neg, t)) in ts.into_iter().enumerate() {
            match (k, neg) {
                (0, true) => s.push('-'),
                (0, false) => {}
                (_, true) => s.push_str(" - "),
                (_, false) => s.push_str(" + "),
            }
            s.push_str(&t);
        }
        s
    })
}

fn joint() -> impl Strategy<Value = JointPmf> {
    prop::collection::vec(0.01f64..1.0, 16).prop_map(|w| {
        let s: f64 = w.iter().sum();
        let axes = LABELS.iter().map(|l| Axis::new(*l, 2)).collect();
        JointPmf::new(axes, w.into_iter().map(|x| x / s).collect()).unwrap()
    })
}

fn holds(sys: &IneqSystem, rates: &BTreeMap<String, f64>, j: &JointPmf) -> (bool, f64) {
    let slacks = sys
        .slacks(rates, |s: &VarSet| {
            let v: Vec<&str> = s.iter().map(String::as_str).collect();
            Ok(j.entropy(&v)?)
        })
        .unwrap();
    let strict: Vec<bool> = sys.normalized().iter().map(|n| n.strict).collect();
    let ok = slacks
        .iter()
        .zip(&strict)
        .all(|(&s, &st)| if st { s > 0.0 } else { s >= 0.0 });
    let margin = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    (ok, margin)
}

proptest! {
    #[test]
    fn print_parse_fixpoint(text in expr_text()) {
        let e = parse_expr(&text).unwrap();
        let printed = e.to_string();
        let again = parse_expr(&printed).unwrap();
        prop_assert_eq!(&again, &e);
        prop_assert_eq!(again.to_string(), printed);
    }

    #[test]
    fn operand_order_is_irrelevant(a in subset(), b in subset()) {
        let fwd = parse_expr(&format!("H({}) + H({}|{})", a.concat(), b.concat(), a.concat())).unwrap();
        let rev_a: Vec<&str> = a.iter().rev().copied().collect();
        let rev_b: Vec<&str> = b.iter().rev().copied().collect();
        let bwd = parse_expr(&format!(
            "H({}|{}) + H({})",
            rev_b.join(","),
            rev_a.join(","),
            rev_a.join(",")
        ))
        .unwrap();
        prop_assert_eq!(fwd, bwd);
    }

    #[test]
    fn renaming_is_equivariant(text in expr_text(), j in joint(), perm in Just(LABELS.to_vec()).prop_shuffle()) {
        let e = parse_expr(&text).unwrap();
        let map: BTreeMap<String, String> = LABELS
            .iter()
            .zip(&perm)
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let renamed = e.rename(&map);
        let jr = j.rename(&perm).unwrap();
        let v = eval_expr(&e, &j).unwrap();
        let w = eval_expr(&renamed, &jr).unwrap();
        prop_assert!((v - w).abs() < 1e-9, "{} vs {}", v, w);
    }

    #[test]
    fn eval_matches_probkit(j in joint(), role in prop::collection::vec(0usize..4, 4)) {
        let pick = |k: usize| -> Vec<&str> {
            LABELS.iter().zip(&role).filter(|(_, &r)| r == k).map(|(l, _)| *l).collect()
        };
        let (a, b, c) = (pick(0), pick(1), pick(2));
        prop_assume!(!a.is_empty() && !b.is_empty());
        let e = EntropyExpr::mutual_info(&a, &b, &c);
        let want = j.mutual_information(&a, &b, &c).unwrap();
        prop_assert!((eval_expr(&e, &j).unwrap() - want).abs() < 1e-9);
    }

    /// The eliminated system holds at `R` exactly when some grid value of the
    /// eliminated rate satisfies the original system (up to the grid step).
    #[test]
    fn p2p_elimination_is_numerically_sound(j in joint(), r in -0.5f64..1.5) {
        let sys = fixtures::p2p_binning();
        let out = fm_eliminate(&sys, fixtures::P2P_ELIMINATE, FmOptions::default()).unwrap();
        let at = |rt: f64| BTreeMap::from([("R".to_string(), r), ("R~".to_string(), rt)]);
        let grid_ok = (-300..=300).any(|k| holds(&sys, &at(k as f64 * 1e-2), &j).0);
        let (out_ok, margin) = holds(&out, &BTreeMap::from([("R".to_string(), r)]), &j);
        if grid_ok {
            prop_assert!(out_ok);
        }
        if out_ok && margin > 2e-2 {
            prop_assert!(grid_ok);
        }
    }

    /// Random systems in two rates: eliminating `S` leaves exactly the
    /// projection, computed here from the interval of feasible `S`.
    #[test]
    fn random_projection_is_exact(
        rows in prop::collection::vec((-2i32..=2, -2i32..=2, -3i32..=3, 0usize..4), 1..7),
        r in -5.0f64..5.0,
    ) {
        let senses = ["<", "<=", ">", ">="];
        let mut text = String::from("rates: R, S\n");
        for (a, b, c, s) in &rows {
            text.push_str(&format!("{a:+} R {b:+} S {} {c}\n", senses[*s]));
        }
        let sys = parse_system(&text).unwrap();
        let out = fm_eliminate(&sys, &["S"], FmOptions::default()).unwrap();
        let (mut lo, mut lo_strict) = (f64::NEG_INFINITY, false);
        let (mut hi, mut hi_strict) = (f64::INFINITY, false);
        let mut fixed_ok = true;
        for (a, b, c, s) in &rows {
            // a r + b S ~ c
            let (a, b, c) = (*a as f64, *b as f64, *c as f64);
            let strict = *s % 2 == 0;
            let upper_sense = *s < 2;
            let k = c - a * r;
            if b == 0.0 {
                let diff = if upper_sense { k } else { -k };
                fixed_ok &= if strict { diff > 0.0 } else { diff >= 0.0 };
                continue;
            }
            let bound = k / b;
            let is_upper = upper_sense == (b > 0.0);
            if is_upper {
                if bound < hi || (bound == hi && strict) {
                    hi = bound;
                    hi_strict = strict;
                }
            } else if bound > lo || (bound == lo && strict) {
                lo = bound;
                lo_strict = strict;
            }
        }
        let gap = hi - lo;
        let feasible = fixed_ok && (gap > 0.0 || (gap == 0.0 && !lo_strict && !hi_strict));
        let (out_ok, margin) = holds(&out, &BTreeMap::from([("R".to_string(), r)]), &j_empty());
        if margin.abs() > 1e-9 && (gap.abs() > 1e-9 || gap.is_infinite()) {
            prop_assert_eq!(out_ok, feasible, "{}\n{}", text, out);
        }
    }
}

fn j_empty() -> JointPmf {
    JointPmf::new(vec![Axis::new("X", 1)], vec![1.0]).unwrap()
}
