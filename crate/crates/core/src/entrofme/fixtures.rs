//! The shipped binning systems and their target regions.

use super::{parse_system, EntropyExpr, IneqSystem};

pub const P2P_BINNING: &str = include_str!("../../fixtures/p2p_binning.txt");
pub const P2P_REGION: &str = include_str!("../../fixtures/p2p_region.txt");
pub const MAC_BINNING: &str = include_str!("../../fixtures/mac_binning.txt");
pub const MAC_MARKOV: &str = include_str!("../../fixtures/mac_markov.txt");
pub const MAC_REGION: &str = include_str!("../../fixtures/mac_region.txt");
pub const BC_BINNING: &str = include_str!("../../fixtures/bc_binning.txt");
pub const BC_REGION: &str = include_str!("../../fixtures/bc_region.txt");

fn load(text: &str) -> IneqSystem {
    parse_system(text).expect("shipped fixture parses")
}

pub fn p2p_binning() -> IneqSystem {
    load(P2P_BINNING)
}

pub fn p2p_region() -> IneqSystem {
    load(P2P_REGION)
}

pub fn mac_binning() -> IneqSystem {
    load(MAC_BINNING)
}

pub fn mac_markov() -> Vec<EntropyExpr> {
    load(MAC_MARKOV).equalities
}

pub fn mac_region() -> IneqSystem {
    load(MAC_REGION)
}

pub fn bc_binning() -> IneqSystem {
    load(BC_BINNING)
}

pub fn bc_region() -> IneqSystem {
    load(BC_REGION)
}

/// Binning rates eliminated for each shipped system.
pub const P2P_ELIMINATE: &[&str] = &["R~"];
pub const MAC_ELIMINATE: &[&str] = &["R~1", "R~2"];
pub const BC_ELIMINATE: &[&str] = &["R~0", "R~1", "R~2"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entrofme::{fm_eliminate, region_equal, FmOptions, Relation};
    use std::time::Instant;

    #[test]
    fn fixtures_parse() {
        assert_eq!(p2p_binning().inequalities.len(), 3);
        assert_eq!(mac_binning().inequalities.len(), 8);
        assert_eq!(mac_region().inequalities.len(), 8);
        assert_eq!(mac_markov().len(), 2);
        assert_eq!(bc_binning().inequalities.len(), 12);
        assert_eq!(bc_region().inequalities.len(), 11);
    }

    #[test]
    fn mac_reproduced() {
        let t = Instant::now();
        let out = fm_eliminate(&mac_binning(), MAC_ELIMINATE, FmOptions::default()).unwrap();
        let r = region_equal(&out, &mac_region(), &mac_markov()).unwrap();
        eprintln!(
            "mac: {} inequalities, {:?}",
            out.inequalities.len(),
            t.elapsed()
        );
        assert_eq!(r.relation, Relation::Equal, "{:?}", r.witness);
    }

    #[test]
    fn bc_reproduced() {
        let t = Instant::now();
        let out = fm_eliminate(&bc_binning(), BC_ELIMINATE, FmOptions::default()).unwrap();
        let r = region_equal(&out, &bc_region(), &[]).unwrap();
        eprintln!(
            "bc: {} inequalities, {:?}",
            out.inequalities.len(),
            t.elapsed()
        );
        assert_eq!(r.relation, Relation::Equal, "{:?}", r.witness);
    }
}
