//! Exit-code and smoke tests for the dpinfer binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dpinfer")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env_remove("DPINFER_SEED")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, content: &str) {
    std::fs::write(dir.join(name), content).unwrap();
}

#[test]
fn missing_file_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["estimate", "no-such-file.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn empty_file_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "empty.csv", "");
    let out = run_in(dir.path(), &["estimate", "empty.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_rows_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "group,successes,trials\nA,11,10\n");
    let out = run_in(dir.path(), &["estimate", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));

    write(dir.path(), "neg.csv", "group,successes,trials\nA,-3,10\nB,1,10\n");
    let out = run_in(dir.path(), &["estimate", "neg.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn all_zero_successes_is_estimand_undefined() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "zero.csv", "group,successes,trials\nA,0,50\nB,0,70\n");
    let out = run_in(dir.path(), &["estimate", "zero.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn degenerate_test_is_test_undefined() {
    let dir = tempfile::tempdir().unwrap();
    // equal rates with the raw estimand: the tie gradient cancels exactly,
    // so the z-statistic has zero standard error
    write(dir.path(), "tied.csv", "group,successes,trials\nA,10,100\nB,10,100\n");
    let out = run_in(dir.path(), &["test-eeoc", "tied.csv", "--raw"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn boundary_mle_is_estimand_undefined() {
    let dir = tempfile::tempdir().unwrap();
    let mut content = String::from("group,applications,hired\n");
    for _ in 0..50 {
        content.push_str("A,3,0\n");
        content.push_str("B,2,1\nB,2,0\n");
    }
    write(dir.path(), "cens.csv", &content);
    let out = run_in(dir.path(), &["mle", "cens.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn estimate_succeeds_and_emits_json() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ok.csv", "group,successes,trials\nA,80,1000\nB,52,950\n");
    let out = run_in(dir.path(), &["estimate", "ok.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "estimate");
    assert!(v["estimate"]["dp"].as_f64().unwrap() > 0.0);
    assert!(v["confidence_interval"]["lower"].is_f64());
}

#[test]
fn unit_format_matches_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let mut unit = String::from("group,outcome\n");
    for i in 0..40 {
        unit.push_str(&format!("A,{}\n", u8::from(i < 8)));
    }
    for i in 0..60 {
        unit.push_str(&format!("B,{}\n", u8::from(i < 9)));
    }
    write(dir.path(), "unit.csv", &unit);
    write(dir.path(), "agg.csv", "group,successes,trials\nA,8,40\nB,9,60\n");
    let u = run_in(dir.path(), &["estimate", "unit.csv", "--unit"]);
    let a = run_in(dir.path(), &["estimate", "agg.csv"]);
    assert_eq!(u.status.code(), Some(0));
    let vu: serde_json::Value = serde_json::from_slice(&u.stdout).unwrap();
    let va: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(vu["estimate"], va["estimate"]);
    assert_eq!(vu["groups"], va["groups"]);
}

#[test]
fn crossfit_seed_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let mut unit = String::from("group,outcome\n");
    for i in 0..200 {
        unit.push_str(&format!("A,{}\n", u8::from(i % 5 == 0)));
        unit.push_str(&format!("B,{}\n", u8::from(i % 4 == 0)));
    }
    write(dir.path(), "unit.csv", &unit);
    let flag = run_in(dir.path(), &["crossfit", "unit.csv", "--seed", "42"]);
    assert_eq!(flag.status.code(), Some(0));
    let env = Command::new(bin())
        .args(["crossfit", "unit.csv"])
        .current_dir(dir.path())
        .env("DPINFER_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn simulate_runs_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "scenario.json",
        r#"{
            "true_rates": [0.1, 0.05],
            "shares": [0.5, 0.5],
            "n": 2000,
            "variants": ["raw", 20.0],
            "replications": 200,
            "seed": 5
        }"#,
    );
    let out = run_in(dir.path(), &["simulate", "scenario.json", "--histogram-csv", "h.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["variants"].as_array().unwrap().len(), 2);
    let hist = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert!(hist.starts_with("bin_left,bin_right,count\n"));
}

#[test]
fn bad_alpha_rule_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ok.csv", "group,successes,trials\nA,80,1000\nB,52,950\n");
    let out = run_in(dir.path(), &["estimate", "ok.csv", "--alpha-rule", "1.0,0.6"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(dir.path(), &["estimate", "ok.csv", "--alpha-rule", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}
