use chansim::probkit::{compose, total_variation, Axis, Factor, JointPmf, Kernel, Pmf};
use proptest::prelude::*;

fn normalized(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(normalized)
}

fn xyz(a: usize, b: usize, c: usize, t: Vec<f64>) -> JointPmf {
    JointPmf::new(
        vec![Axis::new("X", a), Axis::new("Y", b), Axis::new("Z", c)],
        t,
    )
    .unwrap()
}

/// A joint on three axes X, Y, Z with sizes in 2..=3.
fn joint3() -> impl Strategy<Value = JointPmf> {
    (2usize..=3, 2usize..=3, 2usize..=3)
        .prop_flat_map(|(a, b, c)| weights(a * b * c).prop_map(move |t| xyz(a, b, c, t)))
}

/// Two joints over the same three axes.
fn joint3_pair() -> impl Strategy<Value = (JointPmf, JointPmf)> {
    (2usize..=3, 2usize..=3, 2usize..=3).prop_flat_map(|(a, b, c)| {
        (weights(a * b * c), weights(a * b * c))
            .prop_map(move |(t, u)| (xyz(a, b, c, t), xyz(a, b, c, u)))
    })
}

fn kernel(n_in: usize, n_out: usize) -> impl Strategy<Value = Kernel> {
    prop::collection::vec(weights(n_out), n_in).prop_map(|rows| Kernel::new(rows).unwrap())
}

proptest! {
    #[test]
    fn entropy_bounds(p in (1usize..8).prop_flat_map(weights)) {
        let p = Pmf::new(p).unwrap();
        let h = p.entropy();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (p.len() as f64).log2() + 1e-12);
    }

    #[test]
    fn chain_rule(j in joint3()) {
        let hxyz = j.entropy(&["X", "Y", "Z"]).unwrap();
        let hx = j.entropy(&["X"]).unwrap();
        let hxy = j.entropy(&["X", "Y"]).unwrap();
        // H(XYZ) = H(X) + H(Y|X) + H(Z|XY)
        let hy_x = hxy - hx;
        let hz_xy = hxyz - hxy;
        prop_assert!((hxyz - (hx + hy_x + hz_xy)).abs() < 1e-12);
        let i = j.mutual_information(&["X"], &["Y"], &["Z"]).unwrap();
        let direct = j.entropy(&["X", "Z"]).unwrap() + j.entropy(&["Y", "Z"]).unwrap()
            - hxyz - j.entropy(&["Z"]).unwrap();
        prop_assert!((i - direct.max(0.0)).abs() < 1e-9);
        prop_assert!(i >= 0.0);
    }

    #[test]
    fn conditioning_reduces_entropy(j in joint3()) {
        let hx = j.entropy(&["X"]).unwrap();
        let hx_y = j.entropy(&["X", "Y"]).unwrap() - j.entropy(&["Y"]).unwrap();
        prop_assert!(hx_y <= hx + 1e-12);
    }

    #[test]
    fn tv_metric(a in weights(5), b in weights(5), c in weights(5)) {
        let [p, q, r] = [a, b, c].map(|t| JointPmf::new(vec![Axis::new("A", 5)], t).unwrap());
        let pq = total_variation(&p, &q).unwrap();
        let qp = total_variation(&q, &p).unwrap();
        let pr = total_variation(&p, &r).unwrap();
        let rq = total_variation(&r, &q).unwrap();
        prop_assert!((pq - qp).abs() < 1e-15);
        prop_assert!(pq <= pr + rq + 1e-12);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&pq));
        prop_assert_eq!(total_variation(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn tv_ignores_axis_order((j, k) in joint3_pair()) {
        let direct = total_variation(&j, &k).unwrap();
        let swapped = total_variation(&j, &k.reorder(&["Z", "X", "Y"]).unwrap()).unwrap();
        prop_assert!((direct - swapped).abs() < 1e-12);
    }

    #[test]
    fn iid_extension(p in weights(3), k in kernel(3, 2), n in 1usize..=4) {
        let p = Pmf::new(p).unwrap();
        let j = compose("X", &p, &[Factor::new(&k, &["X"], &[("Y", 2)])]).unwrap();
        let jn = j.iid_extend(n).unwrap();
        let names: Vec<String> = jn.axis_names().iter().map(|s| s.to_string()).collect();
        let all: Vec<&str> = names.iter().map(String::as_str).collect();
        let h1 = j.entropy(&["X", "Y"]).unwrap();
        prop_assert!((jn.entropy(&all).unwrap() - n as f64 * h1).abs() < 1e-9);
        for i in 1..=n {
            let xi = format!("X_{i}");
            let yi = format!("Y_{i}");
            let m = jn.marginalize(&[&xi, &yi]).unwrap().rename(&["X", "Y"]).unwrap();
            prop_assert!(total_variation(&m, &j).unwrap() < 1e-12);
        }
    }

    #[test]
    fn data_processing(p in weights(3), k1 in kernel(3, 3), k2 in kernel(3, 2)) {
        let p = Pmf::new(p).unwrap();
        let j = compose(
            "X",
            &p,
            &[
                Factor::new(&k1, &["X"], &[("Y", 3)]),
                Factor::new(&k2, &["Y"], &[("Z", 2)]),
            ],
        )
        .unwrap();
        let ixy = j.mutual_information(&["X"], &["Y"], &[]).unwrap();
        let ixz = j.mutual_information(&["X"], &["Z"], &[]).unwrap();
        prop_assert!(ixz <= ixy + 1e-12);
        prop_assert!(j.mutual_information(&["X"], &["Z"], &["Y"]).unwrap() < 1e-9);
    }

    #[test]
    fn conditional_reconstructs_joint(p in weights(3), k in kernel(3, 4)) {
        let p = Pmf::new(p).unwrap();
        let j = JointPmf::from_channel("X", &p, "Y", &k).unwrap();
        let back = j.conditional(&["Y"], &["X"]).unwrap();
        for x in 0..3 {
            for y in 0..4 {
                prop_assert!((back.get(x, y) - k.get(x, y)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn reference_values() {
    let h = Pmf::bernoulli(0.05).unwrap().entropy();
    assert!((h - 0.28640).abs() < 1e-5, "{h}");
    let j = JointPmf::from_channel(
        "X",
        &Pmf::uniform(2).unwrap(),
        "Y",
        &Kernel::bsc(0.25).unwrap(),
    )
    .unwrap();
    let i = j.mutual_information(&["X"], &["Y"], &[]).unwrap();
    assert!((i - 0.18872).abs() < 1e-5, "{i}");
    let p = JointPmf::new(vec![Axis::new("A", 2)], vec![0.5, 0.5]).unwrap();
    let q = JointPmf::new(vec![Axis::new("A", 2)], vec![0.4, 0.6]).unwrap();
    assert!((total_variation(&p, &q).unwrap() - 0.2).abs() < 1e-15);
}
