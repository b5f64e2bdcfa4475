use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_levelset-lab"));
    c.env_remove("LEVELSET_LAB_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    lab().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_example2_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.json");
    let o = run(&["solve", "--instance", "example2", "--epsilon", "1e-3", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&out);
    let keys: Vec<&str> = doc.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["tool", "version", "command", "config", "seed", "result"]);
    assert_eq!(doc["command"], "solve");
    assert_eq!(doc["result"]["status"], "ok");
    let tau = doc["result"]["trace"]["final_tau"].as_f64().unwrap();
    assert!((tau - (-1.0 - 1e-3f64.sqrt())).abs() <= 1e-5, "{tau}");
    assert_eq!(doc["config"]["epsilon"].as_f64(), Some(1e-3));
}

#[test]
fn solve_example1_reports_possible_infinite_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.json");
    let o = run(&["solve", "--instance", "example1", "--epsilon", "1e-3", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("gap may be infinite"));
    let doc = read_json(&out);
    assert_eq!(doc["result"]["status"], "bracket_error");
}

#[test]
fn solve_bpdn_secant() {
    let o = run(&["solve", "--instance", "bpdn", "--seed", "1", "--epsilon", "1e-6", "--method", "secant"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let tau = doc["result"]["trace"]["final_tau"].as_f64().unwrap();
    assert!((tau - 2.105708840021255).abs() <= 1e-3 * 2.105708840021255, "{tau}");
    assert_eq!(doc["seed"], 1);
}

#[test]
fn budget_exhaustion_exits_4() {
    let o = run(&["solve", "--instance", "example2", "--epsilon", "1e-3", "--lo", "-3", "--hi", "1", "--max-evals", "4"]);
    assert_eq!(code(&o), 4);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["result"]["status"], "budget_error");
    assert_eq!(doc["result"]["trace"]["evaluations"], 4);
}

#[test]
fn bad_bracket_exits_3() {
    let o = run(&["solve", "--instance", "example2", "--epsilon", "1e-3", "--lo", "-0.5", "--hi", "1"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn configuration_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["solve", "--instance", "example2"],
        &["solve", "--instance", "example2", "--epsilon", "-1"],
        &["solve", "--instance", "nope", "--epsilon", "1e-3"],
        &["solve", "--instance", "example2", "--epsilon", "1e-3", "--seed", "4"],
        &["solve", "--instance", "bpdn", "--epsilon", "1e-3", "--m", "60"],
        &["solve", "--instance", "example2", "--epsilon", "1e-3", "--lo", "1", "--hi", "0"],
        &["sweep", "--instance", "example2", "--grid", "1:0:5"],
        &["sweep", "--instance", "example2", "--grid", "0,0"],
        &["diagnose", "--instance", "example2", "--probe-caps", "100,10"],
        &["reproduce", "example9"],
        &["--workers", "0", "reproduce", "example2"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn diagnose_example2_finds_finite_gap() {
    let o = run(&["diagnose", "--instance", "example2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &doc["result"]["report"];
    assert_eq!(r["classification"], "finite");
    assert!((r["tau_d_est"].as_f64().unwrap() + 1.0).abs() <= 1e-2);
    assert!(r["divergence"]["slope"].as_f64().is_some());
}

#[test]
fn diagnose_regularized_example2_finds_zero_gap() {
    let o = run(&["diagnose", "--instance", "example2", "--regularize", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["result"]["report"]["classification"], "zero");
    assert!((doc["result"]["report"]["tau_d_est"].as_f64().unwrap() - 0.1).abs() <= 1e-3);
}

#[test]
fn sweep_csv_layout() {
    let o = run(&["sweep", "--instance", "example2", "--grid", "-2:0:5", "--tol", "1e-4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# tool=levelset-lab version="));
    assert!(lines[1].starts_with("# instance=example2 axis=v_of_tau tol=1e-4 norm_cap=1e3 seed=none"));
    assert!(lines[2].starts_with("# config={"));
    assert_eq!(lines[3], "param,lower,upper,cap_hit,attained");
    assert_eq!(lines.len(), 4 + 5);
    assert!(lines[4].starts_with("-2e0,1e0,"));
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let args = ["sweep", "--instance", "example2", "--grid", "-2:1:13", "--format", "json"];
    let a = lab().args(["--workers", "1"]).args(args).output().unwrap();
    let b = lab().args(["--workers", "4"]).args(args).output().unwrap();
    let c = lab().env("LEVELSET_LAB_WORKERS", "3").args(args).output().unwrap();
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let solve = ["solve", "--instance", "example2", "--epsilon", "1e-4", "--method", "newton"];
    assert_eq!(run(&solve).stdout, run(&solve).stdout);
}

#[test]
fn reproduce_prints_pass_lines() {
    let o = run(&["reproduce", "example1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l == "example1: gap=infinite PASS"), "{text}");
}

#[test]
fn fixture_regenerates_bundled_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("instances.json");
    let o = run(&["fixture", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let bundled = include_str!("../fixtures/instances.json");
    assert_eq!(std::fs::read_to_string(&out).unwrap(), bundled);
}
