mod common;

use chansim::osrb::fixtures::{binning_margins, noiseless_identity, ternary_convergence, TERNARY_RATES};
use chansim::osrb::{bin_count, draw_binning, fix_g_instance, simulate, GSelection, Protocol, SimConfig, DEFAULT_SEQUENCE_CAP};
use chansim::probkit::Pmf;
use proptest::prelude::*;

fn cfg(n: usize, rate_g: f64, rate_w: f64, seed: u64) -> SimConfig {
    SimConfig {
        n,
        rate_g,
        rate_w,
        seed,
        ..Default::default()
    }
}

fn rate() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.5), Just(1.0), 0.0f64..1.5]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn induced_law_is_a_valid_simulation(seed in any::<u64>(), n in 1usize..=3, rg in rate(), rw in rate()) {
        let (inst, aux) = common::p2p_pair(&mut common::rng(seed));
        let r = simulate(&inst, &aux, &cfg(n, rg, rw, seed), Protocol::B).unwrap();
        prop_assert!(r.total_mass_error <= 1e-9);
        prop_assert!(r.x_marginal_error <= 1e-9);
        prop_assert!((0.0..=2.0 + 1e-9).contains(&r.tv_joint));
        prop_assert!((0.0..=1.0).contains(&r.sw_error_prob));
        prop_assert_eq!(r.tv_per_g.len(), r.num_g);
        // the mixture over g is no farther than the average of its parts
        let mean = r.tv_per_g.iter().sum::<f64>() / r.num_g as f64;
        prop_assert!(r.tv_joint <= mean + 1e-9);
        let best = fix_g_instance(&r, GSelection::Best).unwrap();
        prop_assert!(best.tv_joint <= mean + 1e-12);
        prop_assert!(r.tv_per_g.iter().all(|&t| t >= best.tv_joint));
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), n in 1usize..=3) {
        let (inst, aux) = common::p2p_pair(&mut common::rng(seed));
        let c = cfg(n, 0.5, 0.5, seed);
        prop_assert_eq!(simulate(&inst, &aux, &c, Protocol::B).unwrap(), simulate(&inst, &aux, &c, Protocol::B).unwrap());
        prop_assert_eq!(simulate(&inst, &aux, &c, Protocol::A).unwrap(), simulate(&inst, &aux, &c, Protocol::A).unwrap());
    }

    #[test]
    fn binning_is_seeded(seed in any::<u64>(), n in 1usize..=6, rg in rate(), rw in rate()) {
        let a = draw_binning(n, rg, rw, 3, seed, DEFAULT_SEQUENCE_CAP).unwrap();
        prop_assert_eq!(&a, &draw_binning(n, rg, rw, 3, seed, DEFAULT_SEQUENCE_CAP).unwrap());
        prop_assert_eq!(a.num_g, bin_count(n, rg).unwrap());
        prop_assert!(a.g_map.iter().all(|&g| (g as usize) < a.num_g));
        prop_assert!(a.w_map.iter().all(|&w| (w as usize) < a.num_w));
        prop_assert!(bin_count(n, rg).unwrap() as f64 >= (n as f64 * rg).exp2() - 1e-9);
    }

    #[test]
    fn bin_counts_grow_with_rate(n in 1usize..=10, r in 0.0f64..2.0, d in 0.0f64..1.0) {
        prop_assert!(bin_count(n, r).unwrap() <= bin_count(n, r + d).unwrap());
    }
}

#[test]
fn identity_on_noiseless_resource_is_exact() {
    let (inst, aux) = noiseless_identity(Pmf::new(vec![0.3, 0.7]).unwrap()).unwrap();
    for n in 1..=4 {
        for seed in 0..3 {
            let r = simulate(&inst, &aux, &cfg(n, 0.0, 0.0, seed), Protocol::B).unwrap();
            assert!(r.tv_joint <= 1e-12 && r.sw_error_prob <= 1e-12, "n = {n}: {r:?}");
        }
    }
}

#[test]
fn ternary_fixture_operates_inside_the_binning_region() {
    let (inst, aux) = ternary_convergence().unwrap();
    let m = binning_margins(&inst, &aux, TERNARY_RATES.0, TERNARY_RATES.1).unwrap();
    assert!(m.iter().all(|&v| v < -0.3), "{m:?}");
}
