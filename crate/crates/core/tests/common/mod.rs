//! Seeded generators of random instances shared by the integration tests.
#![allow(dead_code)]

use chansim::probkit::{Axis, JointPmf, Kernel, Pmf};
use chansim::regions::{p2p_inner_check, p2p_joint, AuxBc, AuxMac, AuxP2P, BcInstance, MacInstance, P2PInstance, DEFAULT_EPS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn pmf(rng: &mut ChaCha8Rng, n: usize) -> Pmf {
    Pmf::new(weights(rng, n)).unwrap()
}

pub fn kernel(rng: &mut ChaCha8Rng, n_in: usize, n_out: usize) -> Kernel {
    Kernel::new((0..n_in).map(|_| weights(rng, n_out)).collect()).unwrap()
}

fn card(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(2..=3)
}

/// A point-to-point instance with an unrelated decomposition.
pub fn p2p_pair(rng: &mut ChaCha8Rng) -> (P2PInstance, AuxP2P) {
    let (nx, ny, nxt, nyt, nu) = (card(rng), card(rng), card(rng), card(rng), card(rng));
    let inst = P2PInstance::new(
        pmf(rng, nx),
        kernel(rng, nx, ny),
        kernel(rng, nxt, nyt),
        rng.gen_range(0.0..1.0),
    )
    .unwrap();
    let aux = AuxP2P {
        enc: kernel(rng, nx, nu * nxt),
        dec: kernel(rng, nyt * nu, ny),
    };
    (inst, aux)
}

/// Retargets `inst` to the law its decomposition induces.
pub fn induced_target(inst: &P2PInstance, aux: &AuxP2P) -> Kernel {
    let j = p2p_joint(inst, aux).unwrap();
    j.conditional(&["Y"], &["X"]).unwrap()
}

/// A point-to-point instance graded `STRICT_IN` for its decomposition:
/// the target is the induced law and the rate clears the first constraint.
pub fn strict_p2p(rng: &mut ChaCha8Rng) -> (P2PInstance, AuxP2P) {
    loop {
        let (mut inst, aux) = p2p_pair(rng);
        inst.target = induced_target(&inst, &aux);
        inst.rate = 0.0;
        let r = p2p_inner_check(&inst, &aux, DEFAULT_EPS).unwrap();
        let s: Vec<f64> = r.slacks.values().copied().collect();
        if s[1] > 1e-3 {
            inst.rate = (-s[0]).max(0.0) + rng.gen_range(0.01..0.5);
            return (inst, aux);
        }
    }
}

pub fn mac_pair(rng: &mut ChaCha8Rng) -> (MacInstance, AuxMac) {
    let (nx, ny, nz) = (card(rng), card(rng), card(rng));
    let (a, b, nzt, nu, nv) = (card(rng), card(rng), card(rng), card(rng), card(rng));
    let inst = MacInstance {
        source: JointPmf::new(vec![Axis::new("X", nx), Axis::new("Y", ny)], weights(rng, nx * ny)).unwrap(),
        target: kernel(rng, nx * ny, nz),
        resource: kernel(rng, a * b, nzt),
        resource_inputs: [a, b],
        rate1: rng.gen_range(0.0..1.0),
        rate2: rng.gen_range(0.0..1.0),
    };
    let aux = AuxMac {
        enc1: kernel(rng, nx, nu * a),
        enc2: kernel(rng, ny, nv * b),
        dec: kernel(rng, nzt * nu * nv, nz),
    };
    (inst, aux)
}

pub fn bc_pair(rng: &mut ChaCha8Rng) -> (BcInstance, AuxBc) {
    let (nx, ny, nz, nxt, nyt, nzt) = (card(rng), 2, 2, card(rng), 2, 2);
    let cards = [card(rng), card(rng), rng.gen_range(1..=2)];
    let [nu, nv, nw] = cards;
    let inst = BcInstance {
        input_pmf: pmf(rng, nx),
        target: kernel(rng, nx, ny * nz),
        target_outputs: [ny, nz],
        resource: kernel(rng, nxt, nyt * nzt),
        resource_outputs: [nyt, nzt],
        rate: rng.gen_range(0.0..1.0),
    };
    let aux = AuxBc {
        enc: kernel(rng, nx, nu * nv * nw * nxt),
        cards,
        dec1: kernel(rng, nyt * nu * nw, ny),
        dec2: kernel(rng, nzt * nv * nw, nz),
    };
    (inst, aux)
}

/// The point-to-point problem as a MAC whose second user is silent.
pub fn p2p_as_mac(inst: &P2PInstance, aux: &AuxP2P) -> (MacInstance, AuxMac) {
    let nx = inst.input_pmf.len();
    let mac = MacInstance {
        source: JointPmf::new(vec![Axis::new("X", nx), Axis::new("Y", 1)], inst.input_pmf.probs().to_vec()).unwrap(),
        target: inst.target.clone(),
        resource: inst.resource.clone(),
        resource_inputs: [inst.resource.n_in(), 1],
        rate1: inst.rate,
        rate2: 0.0,
    };
    let one = Kernel::identity(1);
    (
        mac,
        AuxMac {
            enc1: aux.enc.clone(),
            enc2: one,
            dec: aux.dec.clone(),
        },
    )
}
