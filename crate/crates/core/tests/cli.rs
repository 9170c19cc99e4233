//! End-to-end runs of the `adiabatic` binary.

use std::process::Command;

use adiabatic_sw::geometry::BundleSpec;
use adiabatic_sw::harness::{run_sweep, Experiment, SweepPlan};
use adiabatic_sw::lattice::LatticeSpec;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adiabatic"))
}

#[test]
fn bad_flags_exit_two() {
    let out = bin().arg("--no-such-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["--threads", "0", "classify", "--genus", "1", "--ell", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["classify", "--genus", "0", "--ell", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn classify_prints_one_row_per_class() {
    let out = bin().args(["classify", "--genus", "2", "--ell", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().or_else(|| v["rows"].as_array()).expect("row list");
    assert_eq!(rows.len(), 5);
}

#[test]
fn solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.json");
    let spec = serde_json::json!({
        "bundle": BundleSpec::new(1, 1, 4.0, 0).unwrap(),
        "lattice": LatticeSpec::cube(4, 1, 4.0),
        "start": "random:3",
    });
    std::fs::write(&job, spec.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["--output", out_dir.to_str().unwrap(), "solve"])
        .arg(&job)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["history.csv", "solve.json", "solution_spinor.snap", "solution_form.snap"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
}

#[test]
fn sweep_is_deterministic() {
    let bundle = BundleSpec::new(1, 1, 4.0, 0).unwrap();
    let mut plan = SweepPlan::new(bundle, vec![Experiment::GapSweep, Experiment::ClassifierTable]);
    plan.deltas = vec![2.0, 4.0, 8.0];
    plan.grids = vec![LatticeSpec::cube(4, 1, 4.0)];
    let a = run_sweep(&plan).unwrap().results_json().unwrap();
    let b = run_sweep(&plan).unwrap().results_json().unwrap();
    assert_eq!(a, b);
}
