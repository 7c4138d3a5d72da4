//! Grading decompositions of a BSC(p) simulation over a BEC(0.5).

use chansim::osrb::casestudy::{bec_bsc_instance, degrading_aux};
use chansim::regions::{p2p_inner_check, AuxP2P, DEFAULT_EPS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for p in [0.25, 0.3, 0.4] {
        let inst = bec_bsc_instance(0.5, p, 0.0)?;
        let r = p2p_inner_check(&inst, &degrading_aux(0.5, p)?, DEFAULT_EPS)?;
        println!("p = {p}: {:?}, tv {:.1e}", r.verdict, r.marginal_tv);
        for (name, s) in &r.slacks {
            println!("  {name:<28} {s:+.6}");
        }
    }

    // sending X uncoded and decoding with the identity on the wrong target
    let inst = bec_bsc_instance(0.5, 0.1, 0.0)?;
    let aux: AuxP2P = serde_json::from_str(
        r#"{"enc": [[1.0, 0.0], [0.0, 1.0]], "dec": [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]}"#,
    )?;
    let r = p2p_inner_check(&inst, &aux, DEFAULT_EPS)?;
    println!("mismatched decoder at p = 0.1: {:?}, tv {:.4}", r.verdict, r.marginal_tv);
    Ok(())
}
