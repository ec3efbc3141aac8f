//! End-to-end runs of the `gfd` binary in scratch directories.

use std::path::Path;
use std::process::{Command, Output};

fn gfd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfd")).current_dir(dir).args(args).output().expect("gfd runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn perfect_synthesize_then_run_raises_alarm_after_fault() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfd(dir.path(), &["synthesize", "--perfect", "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/filter.toml").exists());
    assert!(dir.path().join("o/synthesis_report.txt").exists());

    let out = gfd(dir.path(), &["run", "--perfect", "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let events = std::fs::read_to_string(dir.path().join("o/events.csv")).unwrap();
    let mut lines = events.lines();
    assert_eq!(lines.next(), Some("k,kind,J"));
    let first: Vec<&str> = lines.next().expect("one event").split(',').collect();
    assert_eq!(&first[..2], &["3003", "raised"]);

    let trace = groundfault::export::read_trace_csv(&dir.path().join("o/trace.csv")).unwrap();
    assert_eq!(trace.len(), 4000);
    assert!(trace[..3001].iter().all(|row| !row.alarm));
}

#[test]
fn perfect_montecarlo_writes_one_row_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gfd(dir.path(), &["synthesize", "--perfect", "--out", "o"])), 0);
    let out = gfd(dir.path(), &["montecarlo", "--perfect", "--out", "o", "--trials", "4", "--lambda", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/montecarlo.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "lambda,J_th,rate,bound,slack,samples");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("3,"));
}

#[test]
fn inspect_dumps_stacked_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfd(dir.path(), &["inspect", "--perfect", "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let entries = std::fs::read_dir(dir.path().join("o/matrices")).unwrap().count();
    assert!(entries > 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("feasibility"));
}

#[test]
fn configuration_problems_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[synthesis]\nlambda = 0.5\n").unwrap();
    assert_eq!(code(&gfd(dir.path(), &["synthesize", "--config", "bad.toml"])), 2);
    std::fs::write(dir.path().join("typo.toml"), "[synthesis]\nlamda = 5.0\n").unwrap();
    assert_eq!(code(&gfd(dir.path(), &["synthesize", "--config", "typo.toml"])), 2);
    assert_eq!(code(&gfd(dir.path(), &["synthesize", "--config", "missing.toml"])), 2);
    assert_eq!(code(&gfd(dir.path(), &["run", "--filter", "missing.toml"])), 2);
    assert_eq!(code(&gfd(dir.path(), &["synthesize", "--lambda", "0.1"])), 2);
}

#[test]
fn mismatched_artifact_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gfd(dir.path(), &["synthesize", "--perfect", "--out", "o"])), 0);
    // a filter for the decoupled setting cannot be replayed on the two-channel scenario
    let out = gfd(dir.path(), &["run", "--filter", "o/filter.toml", "--out", "o2"]);
    assert_eq!(code(&out), 2);
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn runtime_failures_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gfd(dir.path(), &["synthesize", "--perfect", "--out", "o"])), 0);
    // the output directory path is occupied by a regular file
    std::fs::write(dir.path().join("blocked"), "").unwrap();
    let out = gfd(dir.path(), &["run", "--perfect", "--filter", "o/filter.toml", "--out", "blocked"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}
