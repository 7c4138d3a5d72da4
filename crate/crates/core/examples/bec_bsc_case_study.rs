//! Which BSC(p) can be simulated from BEC(0.5) without shared randomness.

use chansim::auxsearch::SearchConfig;
use chansim::osrb::casestudy::{casestudy_bec_bsc, CaseStudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = CaseStudyConfig {
        search: SearchConfig {
            restarts: 2,
            max_iters: 300,
            ..Default::default()
        },
        ..Default::default()
    };
    let grid: Vec<f64> = (1..=10).map(|i| i as f64 * 0.05).collect();
    let r = casestudy_bec_bsc(&grid, &cfg)?;
    println!(
        "refuted below p = {:.4}, degrading works from p = {}",
        r.capacity_threshold, r.degrading_threshold
    );
    for pt in &r.points {
        println!(
            "p = {:.2}  {:<22} lhs {:.4} rhs {:.4}  search {:?}",
            pt.p,
            pt.zone.as_str(),
            pt.outer_lhs,
            pt.outer_rhs,
            pt.search_verdict
        );
    }
    Ok(())
}
