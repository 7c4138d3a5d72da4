//! Multiple-access and broadcast inner checks, with the `V`-free reduction.

use chansim::regions::{bc_inner_check, mac_inner_check, AuxBc, AuxMac, BcInstance, MacInstance, DEFAULT_EPS};

fn load<T: serde::de::DeserializeOwned>(name: &str) -> Result<T, Box<dyn std::error::Error>> {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst: MacInstance = load("mac_instance.json")?;
    let aux: AuxMac = load("mac_aux.json")?;
    for disable_v in [false, true] {
        let r = mac_inner_check(&inst, &aux, DEFAULT_EPS, disable_v)?;
        println!("MAC (disable_v = {disable_v}): {:?}, {} constraints", r.verdict, r.slacks.len());
    }

    let inst: BcInstance = load("bc_instance.json")?;
    let aux: AuxBc = load("bc_aux.json")?;
    let r = bc_inner_check(&inst, &aux, DEFAULT_EPS)?;
    println!("BC: {:?}, tv {:.1e}", r.verdict, r.marginal_tv);
    for (name, s) in &r.slacks {
        println!("  {s:+.3e}  {name}");
    }
    Ok(())
}
