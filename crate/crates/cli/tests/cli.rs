//! End-to-end runs of the `dbar` binary: exit codes, report layout, and
//! byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dbar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbar"))
        .args(args)
        .output()
        .expect("binary must run")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn duality_run_is_deterministic_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "duality.json",
        r#"{
            "experiment": "duality",
            "seed": 7,
            "instances_per_cell": 4,
            "alphabets": [2, 3],
            "site_counts": [1, 2],
            "exponents": [1, "3/2", 2, "inf"],
            "gap_tolerance": 1e-6
        }"#,
    );
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    let r1 = dbar(&["--config", &config, "--out", out1.to_str().unwrap()]);
    assert!(r1.status.success(), "{}", String::from_utf8_lossy(&r1.stderr));
    let r2 = dbar(&[
        "--config",
        &config,
        "--out",
        out2.to_str().unwrap(),
        "--jobs",
        "3",
    ]);
    assert!(r2.status.success());

    let s1 = fs::read(out1.join("summary.json")).unwrap();
    let s2 = fs::read(out2.join("summary.json")).unwrap();
    assert_eq!(s1, s2, "summaries must be byte-identical across --jobs");
    let c1 = fs::read(out1.join("duality.csv")).unwrap();
    let c2 = fs::read(out2.join("duality.csv")).unwrap();
    assert_eq!(c1, c2);

    let summary: serde_json::Value = serde_json::from_slice(&s1).unwrap();
    assert_eq!(summary["pass"], serde_json::json!(true));
    assert!(summary["max_gap"].as_f64().unwrap() <= 1e-6);
    // every tolerance visible in the output
    assert!(summary.get("gap_tolerance").is_some());
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "duality.json",
        r#"{
            "experiment": "duality",
            "seed": 7,
            "instances_per_cell": 2,
            "alphabets": [2],
            "site_counts": [2],
            "exponents": [2],
            "gap_tolerance": 1e-6
        }"#,
    );
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    assert!(dbar(&["--config", &config, "--out", out1.to_str().unwrap()])
        .status
        .success());
    assert!(dbar(&[
        "--config",
        &config,
        "--out",
        out2.to_str().unwrap(),
        "--seed-override",
        "999"
    ])
    .status
    .success());
    let c1 = fs::read(out1.join("duality.csv")).unwrap();
    let c2 = fs::read(out2.join("duality.csv")).unwrap();
    assert_ne!(c1, c2, "a different seed must sample different instances");
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{"experiment": "duality", "seed": 1, "unknown_knob": true}"#,
    );
    let out = dir.path().join("never");
    let r = dbar(&["--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists(), "no partial outputs for malformed configs");

    // invalid JSON entirely
    let config2 = write_config(dir.path(), "bad2.json", "{nope");
    let r2 = dbar(&["--config", &config2, "--out", out.to_str().unwrap()]);
    assert_eq!(r2.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn edi_expectations_drive_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // C = 0.1 < 1/4: claiming a clean pass must fail with exit 1 and the
    // violation rows written
    let claim_pass = write_config(
        dir.path(),
        "edi_pass.json",
        r#"{
            "experiment": "edi",
            "seed": 5,
            "spec": {"kind": "iid", "probs": [0.5, 0.5]},
            "sites": 2,
            "c": 0.1,
            "p": 2,
            "trials": 150,
            "expect": "pass"
        }"#,
    );
    let out1 = dir.path().join("claim_pass");
    let r1 = dbar(&["--config", &claim_pass, "--out", out1.to_str().unwrap()]);
    assert_eq!(r1.status.code(), Some(1), "violations must exit 1");
    let csv = fs::read_to_string(out1.join("edi.csv")).unwrap();
    assert!(csv.lines().count() > 1, "violation rows must be written");
    assert_eq!(csv.lines().next().unwrap(), "trial,entropy,distance,bound,slack");

    // same instance, claiming a violation exists: exit 0
    let claim_violation = write_config(
        dir.path(),
        "edi_viol.json",
        r#"{
            "experiment": "edi",
            "seed": 5,
            "spec": {"kind": "iid", "probs": [0.5, 0.5]},
            "sites": 2,
            "c": 0.1,
            "p": 2,
            "trials": 150,
            "expect": "violation"
        }"#,
    );
    let out2 = dir.path().join("claim_viol");
    let r2 = dbar(&["--config", &claim_violation, "--out", out2.to_str().unwrap()]);
    assert_eq!(r2.status.code(), Some(0));

    // at the McDiarmid constant the clean-pass claim holds
    let quarter = write_config(
        dir.path(),
        "edi_quarter.json",
        r#"{
            "experiment": "edi",
            "seed": 5,
            "spec": {"kind": "iid", "probs": [0.5, 0.5]},
            "sites": 2,
            "c": 0.25,
            "p": 2,
            "trials": 150,
            "expect": "pass"
        }"#,
    );
    let out3 = dir.path().join("quarter");
    let r3 = dbar(&["--config", &quarter, "--out", out3.to_str().unwrap()]);
    assert_eq!(r3.status.code(), Some(0));
}

#[test]
fn counterexample_emits_monotone_log_moment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "ce.json",
        r#"{
            "experiment": "counterexample",
            "l_grid": [1, 2, 4, 10, 100],
            "p": 2,
            "alphabet": 2,
            "n_grid": [0, 1, 2, 3]
        }"#,
    );
    let out = dir.path().join("out");
    let r = dbar(&["--config", &config, "--out", out.to_str().unwrap()]);
    assert!(r.status.success());
    let csv = fs::read_to_string(out.join("counterexample.csv")).unwrap();
    let moments: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|line| line.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(moments.len(), 5);
    for w in moments.windows(2) {
        assert!(w[1] > w[0], "log_moment column must be strictly increasing");
    }
    assert!(out.join("gap_growth.csv").exists());
}

#[test]
fn pressure_run_with_explicit_tables() {
    let dir = tempfile::tempdir().unwrap();
    // f = σ_0 on spins: table [-1, 1] over one site; bound (1/8)·4 = 0.5
    let config = write_config(
        dir.path(),
        "pressure.json",
        r#"{
            "experiment": "pressure",
            "seed": 1,
            "spec": {"kind": "iid", "probs": [0.5, 0.5]},
            "c": 0.25,
            "functions": [
                {"interval": [0, 0], "alphabet": 2, "values": [-1.0, 1.0]},
                {"interval": [0, 1], "alphabet": 2, "values": [1.0, -1.0, -1.0, 1.0]}
            ]
        }"#,
    );
    let out = dir.path().join("out");
    let r = dbar(&["--config", &config, "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(out.join("pressure.csv")).unwrap();
    let first = csv.lines().nth(1).unwrap();
    let centered: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    assert!((centered - 1.0_f64.cosh().ln()).abs() < 1e-9);
}

#[test]
fn thermo_and_dbar_runs() {
    let dir = tempfile::tempdir().unwrap();
    let thermo = write_config(
        dir.path(),
        "thermo.json",
        r#"{
            "experiment": "thermo",
            "seed": 3,
            "spec_a": {"kind": "iid", "probs": [0.5, 0.5]},
            "spec_b": {"kind": "iid", "probs": [0.8, 0.2]},
            "exponents": [1, 2, "inf"],
            "n_max": 2,
            "spread_tolerance": 1e-6
        }"#,
    );
    let out = dir.path().join("thermo");
    let r = dbar(&["--config", &thermo, "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(out.join("thermo.csv")).unwrap();
    // iid pair: every normalized value is the single-site TV = 0.3
    for line in csv.lines().skip(1) {
        let normalized: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((normalized - 0.3).abs() < 1e-7);
    }

    let dbar_cfg = write_config(
        dir.path(),
        "dbar.json",
        r#"{
            "experiment": "dbar",
            "seed": 3,
            "spec_a": {"kind": "markov", "transition": [[0.9, 0.1], [0.1, 0.9]], "stationary": [0.5, 0.5]},
            "spec_b": {"kind": "markov", "transition": [[0.7, 0.3], [0.3, 0.7]], "stationary": [0.5, 0.5]},
            "n_max": 2,
            "mc_samples": 50000,
            "burn_in": 1000
        }"#,
    );
    let out2 = dir.path().join("dbar");
    let r2 = dbar(&["--config", &dbar_cfg, "--out", out2.to_str().unwrap()]);
    assert!(r2.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out2.join("summary.json")).unwrap()).unwrap();
    assert!(summary["lower"].as_f64().unwrap() <= summary["upper"].as_f64().unwrap() + 0.01);
}

#[test]
fn gcb_accepts_explicit_measure_json_and_beta_sweep() {
    let dir = tempfile::tempdir().unwrap();
    // uniform two-site table passed as an explicit measure object
    let config = write_config(
        dir.path(),
        "gcb_measure.json",
        r#"{
            "experiment": "gcb",
            "seed": 4,
            "measure": {"alphabet": 2, "volume": [[0], [1]], "probs": [0.25, 0.25, 0.25, 0.25]},
            "c": 0.25,
            "q": 2,
            "restarts": 2,
            "beta_sweep": [0.5, 1.0, 2.0]
        }"#,
    );
    let out = dir.path().join("out");
    let r = dbar(&["--config", &config, "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["beta_sweep"].as_array().unwrap().len(), 3);

    // both spec and measure present: malformed, exit 2
    let bad = write_config(
        dir.path(),
        "gcb_bad.json",
        r#"{
            "experiment": "gcb",
            "seed": 4,
            "spec": {"kind": "iid", "probs": [0.5, 0.5]},
            "sites": 2,
            "measure": {"alphabet": 2, "volume": [[0]], "probs": [0.5, 0.5]},
            "c": 0.25,
            "q": 2,
            "restarts": 1
        }"#,
    );
    let r2 = dbar(&["--config", &bad, "--out", dir.path().join("no").to_str().unwrap()]);
    assert_eq!(r2.status.code(), Some(2));
}

#[test]
fn gcb_run_reports_optimal_constant() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "gcb.json",
        r#"{
            "experiment": "gcb",
            "seed": 9,
            "spec": {"kind": "iid", "probs": [0.5, 0.5]},
            "sites": 2,
            "c": 0.25,
            "q": 2,
            "restarts": 3
        }"#,
    );
    let out = dir.path().join("out");
    let r = dbar(&["--config", &config, "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let c_lower = summary["optimal_constant_lower_bound"].as_f64().unwrap();
    assert!(c_lower > 0.2 && c_lower <= 0.25 + 1e-9);
    assert_eq!(summary["violations"], serde_json::json!(0));
}
