//! Eliminating the binning rates and comparing with the stated regions.

use chansim::entrofme::fixtures::{
    bc_binning, bc_region, mac_binning, mac_markov, mac_region, p2p_binning, p2p_region, BC_ELIMINATE,
    MAC_ELIMINATE, P2P_ELIMINATE,
};
use chansim::entrofme::{fm_eliminate, region_equal, FmOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("p2p", p2p_binning(), P2P_ELIMINATE, p2p_region(), Vec::new()),
        ("mac", mac_binning(), MAC_ELIMINATE, mac_region(), mac_markov()),
        ("bc", bc_binning(), BC_ELIMINATE, bc_region(), Vec::new()),
    ];
    for (name, sys, elim, region, eqs) in cases {
        let out = fm_eliminate(&sys, elim, FmOptions::default())?;
        let cmp = region_equal(&out, &region, &eqs)?;
        println!("{name}: {} inequalities after elimination, {:?}", out.inequalities.len(), cmp.relation);
        if name == "p2p" {
            println!("{out}");
        }
    }
    Ok(())
}
