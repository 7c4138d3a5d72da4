//! Exact finite-blocklength simulation of the random-binning scheme.

use chansim::osrb::fixtures::{binning_margins, ternary_convergence, TERNARY_RATES};
use chansim::osrb::{fix_g_instance, simulate, simulate_monte_carlo, GSelection, Protocol, SimConfig};
use chansim::seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (inst, aux) = ternary_convergence()?;
    let (rate_g, rate_w) = TERNARY_RATES;
    println!("binning margins {:?}", binning_margins(&inst, &aux, rate_g, rate_w)?);
    for n in [1, 2, 3, 4] {
        let cfg = SimConfig {
            n,
            rate_g,
            rate_w,
            seed: seed::indexed(1, n as u64),
            ..Default::default()
        };
        let r = simulate(&inst, &aux, &cfg, Protocol::B)?;
        let best = fix_g_instance(&r, GSelection::Best)?;
        println!(
            "n = {n}: tv {:.4}  sw error {:.4}  best g tv {:.4}  bins {}x{}",
            r.tv_joint, r.sw_error_prob, best.tv_joint, r.num_g, r.num_w
        );
    }
    let cfg = SimConfig {
        n: 3,
        rate_g,
        rate_w,
        ..Default::default()
    };
    let exact = simulate(&inst, &aux, &cfg, Protocol::B)?;
    let mc = simulate_monte_carlo(&inst, &aux, &cfg, 200_000, 5)?;
    println!("n = 3 exact tv {:.4}, sampled {:.4}", exact.tv_joint, mc.tv_joint);
    Ok(())
}
