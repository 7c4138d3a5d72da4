//! Stochastic search for auxiliary decompositions, re-checked exactly.

use chansim::auxsearch::{find_feasible_aux_p2p, min_markov_functional, SearchConfig};
use chansim::osrb::casestudy::bec_bsc_instance;
use chansim::regions::{p2p_inner_check, Weights, DEFAULT_EPS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SearchConfig {
        seed: 3,
        restarts: 4,
        max_iters: 400,
        ..Default::default()
    };
    for p in [0.3, 0.2, 0.12] {
        let inst = bec_bsc_instance(0.5, p, 0.0)?;
        let res = find_feasible_aux_p2p(&inst, &cfg)?;
        let check = p2p_inner_check(&inst, &res.best_point, DEFAULT_EPS)?;
        println!(
            "p = {p}: best {:+.5} (restart {}), exact check {:?}",
            res.best_value, res.best_restart, check.verdict
        );
    }
    let inst = bec_bsc_instance(0.5, 0.2, 0.0)?;
    let m = min_markov_functional(&inst.target_joint()?, &Weights::new(1.0, 0.0, 0.0)?, &cfg)?;
    println!("min I(U;XY) over X - U - Y: {:.5}", m.best_value);
    Ok(())
}
