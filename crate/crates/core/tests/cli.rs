use std::path::PathBuf;
use std::process::{Command, Output};

use chansim::cli::validate_report;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chansim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn inner_check_passes_with_exit_zero() {
    let o = run(&[
        "check-inner-p2p",
        "--instance",
        &fixture("bec_bsc_p025.json"),
        "--aux",
        &fixture("degrading_p025.json"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = validate_report(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(r.result["verdict"], "CLOSURE_IN");
}

#[test]
fn refuted_converse_exits_two() {
    let o = run(&["check-outer-p2p", "--instance", &fixture("bec_bsc_p005.json")]);
    assert_eq!(code(&o), 2);
    let r = validate_report(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert!((r.result["values"]["lhs"].as_f64().unwrap() - 0.7136).abs() < 1e-3);
}

#[test]
fn malformed_input_exits_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let o = run(&[
        "check-inner-p2p",
        "--instance",
        empty.to_str().unwrap(),
        "--aux",
        &fixture("degrading_p025.json"),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1 column 0"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"input_pmf\": [0.5, 0.5],\n  \"bogus\": 1\n}").unwrap();
    let o = run(&["check-outer-p2p", "--instance", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn fme_reproduces_region() {
    let o = run(&[
        "fme",
        "--system",
        &fixture("p2p_binning.txt"),
        "--eliminate",
        "R~",
        "--compare",
        &fixture("p2p_region.txt"),
    ]);
    assert_eq!(code(&o), 0);
    let r = validate_report(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(r.result["relation"], "EQUAL");
}

#[test]
fn replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let o = run(&[
        "--seed",
        "11",
        "search-inner-p2p",
        "--instance",
        &fixture("bec_bsc_p025.json"),
        "--restarts",
        "2",
        "--iters",
        "100",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["replay", "--report", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn reports_validate_and_reject_tampering() {
    let o = run(&[
        "osrb-sim",
        "--instance",
        &fixture("ternary_instance.json"),
        "--aux",
        &fixture("ternary_aux.json"),
        "--n",
        "1,2",
        "--rate-g",
        "0.5",
        "--rate-w",
        "0.5",
        "--seeds",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let r = validate_report(&text).unwrap();
    assert_eq!(r.result["reports"].as_array().unwrap().len(), 4);
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["result"]["extra"] = 1.into();
    assert!(validate_report(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["config"]["command"]["name"] = "fme".into();
    assert!(validate_report(&v.to_string()).is_err());
}

#[test]
fn csv_columns() {
    let o = run(&[
        "osrb-sim",
        "--instance",
        &fixture("ternary_instance.json"),
        "--aux",
        &fixture("ternary_aux.json"),
        "--n",
        "2",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("n,seed,tv_joint,sw_error_prob"));
    assert_eq!(text.lines().count(), 2);

    let o = run(&[
        "casestudy-bec-bsc",
        "--p-grid",
        "0.05:0.3:0.25",
        "--restarts",
        "1",
        "--iters",
        "50",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("p,zone,outer_lhs,outer_rhs,outer_verdict,degrading_verdict,search_value,search_verdict")
    );
    assert!(lines.next().unwrap().starts_with("0.05,capacity_infeasible,"));
    assert!(lines.next().unwrap().starts_with("0.3,feasible_by_degrading,"));
}

#[test]
fn mac_bc_and_cuff_checks() {
    let o = run(&[
        "check-inner-mac",
        "--instance",
        &fixture("mac_instance.json"),
        "--aux",
        &fixture("mac_aux.json"),
        "--disable-v",
    ]);
    assert_eq!(code(&o), 0);
    let o = run(&["check-inner-bc", "--instance", &fixture("bc_instance.json"), "--aux", &fixture("bc_aux.json")]);
    assert_eq!(code(&o), 0);
    let cuff = |rate: &str| {
        code(&run(&[
            "check-cuff",
            "--instance",
            &fixture("bec_bsc_p025.json"),
            "--aux",
            &fixture("degrading_p025.json"),
            "--wire-rate",
            rate,
        ]))
    };
    assert_eq!(cuff("1"), 0);
    assert_eq!(cuff("0.5"), 2);
    let o = run(&["check-cuff", "--instance", &fixture("bec_bsc_p025.json"), "--aux", &fixture("degrading_p025.json")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn fixing_g_needs_protocol_b() {
    let o = run(&[
        "osrb-sim",
        "--instance",
        &fixture("ternary_instance.json"),
        "--aux",
        &fixture("ternary_aux.json"),
        "--protocol",
        "a",
        "--fix-g",
        "best",
    ]);
    assert_eq!(code(&o), 1);
}
