use std::path::Path;
use std::process::Command;

use pqlearn_core::harness::{TrialReport, VerifyReport};

fn pqlearn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pqlearn")).args(args).env_remove("PQLEARN_SEED").output().expect("binary runs")
}

fn verify_json(dir: &Path, name: &str) -> String {
    let out = dir.join(name);
    let status = pqlearn(&["verify", "--seed", "42", "--criteria", "1,2,6,9", "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let report: VerifyReport = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    report.to_json(false)
}

#[test]
fn verify_is_reproducible_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    let a = verify_json(dir.path(), "a.json");
    assert_eq!(a, verify_json(dir.path(), "b.json"));
    assert!(!a.contains("elapsed_ms"));
}

#[test]
fn run_then_plot_fig1a() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("fig1a.json");
    let svg = dir.path().join("fig1a.svg");
    let csv = dir.path().join("fig1a.csv");
    let run = pqlearn(&[
        "run", "--scenario", "fig1a", "--out", report.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let parsed = TrialReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed.aggregate.contract_met);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 2);
    let plot = pqlearn(&["plot", "--report", report.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert!(plot.status.success());
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn flags_override_scenario_values() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("p.json");
    let run = pqlearn(&[
        "run", "--scenario", "parity-d8", "--trials", "3", "--seed", "9", "--epsilon", "0.2", "--out",
        report.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let parsed = TrialReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!((parsed.scenario.trials, parsed.scenario.seed, parsed.scenario.epsilon), (3, 9, 0.2));
    assert_eq!(parsed.trials.len(), 3);
}

#[test]
fn sweep_writes_one_report_per_accuracy() {
    let out = pqlearn(&["sweep", "--scenario", "fig1a", "--epsilon-grid", "0.05,0.1,0.2"]);
    assert!(out.status.success());
    let reports: Vec<TrialReport> = serde_json::from_slice(&out.stdout).unwrap();
    let eps: Vec<f64> = reports.iter().map(|r| r.scenario.epsilon).collect();
    assert_eq!(eps, [0.05, 0.1, 0.2]);
}

#[test]
fn bad_input_exits_with_an_error() {
    assert_eq!(pqlearn(&["run", "--scenario", "no-such-scenario"]).status.code(), Some(2));
    assert_eq!(pqlearn(&["verify", "--criteria", "12"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let parity = dir.path().join("p.json");
    pqlearn(&["run", "--scenario", "parity-d8", "--trials", "1", "--out", parity.to_str().unwrap()]);
    let plot = pqlearn(&["plot", "--report", parity.to_str().unwrap(), "--out", dir.path().join("x.svg").to_str().unwrap()]);
    assert_eq!(plot.status.code(), Some(2));
}
