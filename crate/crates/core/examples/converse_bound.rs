//! Outer-bound checks: the weighted converse at a fixed input and its
//! maximum over a grid of input laws.

use chansim::auxsearch::SearchConfig;
use chansim::osrb::casestudy::bec_bsc_instance;
use chansim::regions::{nonbayesian_outer_check, p2p_outer_check, OuterConfig, Weights};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = OuterConfig {
        search: SearchConfig {
            seed: 7,
            restarts: 4,
            max_iters: 300,
            ..Default::default()
        },
        ..Default::default()
    };
    for p in [0.05, 0.11, 0.2] {
        let inst = bec_bsc_instance(0.5, p, 0.0)?;
        for w in [Weights::default(), Weights::new(1.0, 0.0, 0.0)?, Weights::new(0.0, 0.0, 1.0)?] {
            let r = p2p_outer_check(&inst, &w, &cfg)?;
            println!(
                "p = {p:<4} w = ({}, {}, {}): lhs {:.4} rhs {:.4} -> {:?}",
                w.beta, w.gamma, w.theta, r.values["lhs"], r.values["rhs"], r.verdict
            );
        }
    }
    let inst = bec_bsc_instance(0.5, 0.05, 0.0)?;
    let r = nonbayesian_outer_check(&inst.target, &inst.resource, 0.0, &Weights::default(), &cfg)?;
    println!("over all inputs: {:?}, worst input {:?}", r.verdict, r.best_input);
    Ok(())
}
