use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SCENARIO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/paper_vi.scenario");

fn etppc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etppc")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn short_run(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", "--scenario", SCENARIO, "--out", out, "--t-end", "2"];
    args.extend_from_slice(extra);
    etppc(&args)
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run(dir.path(), &["--no-analysis"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["trace.csv", "events.csv", "summary.json", "plots/fig5_v2_s2.csv"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    assert!(!dir.path().join("analysis.json").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps"], 2000);
}

#[test]
fn run_with_analysis_reports_check_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run(dir.path(), &[]);
    let c = code(&out);
    assert!(c == 0 || c == 5, "unexpected exit {c}: {}", stderr(&out));
    assert!(dir.path().join("analysis.json").is_file());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["on_envelope", "off_bound", "layer1_envelope", "v2_below_s2", "miet"] {
        assert!(text.contains(name), "no verdict for {name}");
    }
}

#[test]
fn zero_rate_gain_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run(dir.path(), &["--set", "controller.k2=0"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("B2 > 0"), "{}", stderr(&out));
}

#[test]
fn missing_scenario_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = etppc(&["run", "--scenario", "/nonexistent/x.scenario", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_override_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run(dir.path(), &["--set", "controller.no_such_key=1"]);
    assert_eq!(code(&out), 2);
}

fn stored_run() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let out = short_run(dir.path(), &["--no-analysis"]);
    assert_eq!(code(&out), 0);
    let trace = dir.path().join("trace.csv");
    (dir, trace)
}

#[test]
fn analyze_matches_run_verdicts() {
    let (dir, trace) = stored_run();
    let out = etppc(&[
        "analyze",
        "--trace",
        trace.to_str().unwrap(),
        "--scenario",
        SCENARIO,
        "--set",
        "simulation.t_end=2.0",
    ]);
    let again = short_run(&dir.path().join("again"), &[]);
    assert_eq!(code(&out), code(&again));
}

#[test]
fn analyze_rejects_tampered_row() {
    let (_dir, trace) = stored_run();
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[51].split(',').map(String::from).collect();
    let omega_x: f64 = cols[5].parse().unwrap();
    cols[5] = format!("{}", omega_x + 1e-3);
    lines[51] = cols.join(",");
    fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let out = etppc(&[
        "analyze",
        "--trace",
        trace.to_str().unwrap(),
        "--scenario",
        SCENARIO,
        "--set",
        "simulation.t_end=2.0",
    ]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("disagrees with recomputation"), "{}", stderr(&out));
}

#[test]
fn analyze_rejects_mismatched_config() {
    let (_dir, trace) = stored_run();
    let out = etppc(&[
        "analyze",
        "--trace",
        trace.to_str().unwrap(),
        "--scenario",
        SCENARIO,
        "--set",
        "simulation.t_end=3.0",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("hash mismatch"), "{}", stderr(&out));
}

#[test]
fn sweep_needs_an_axis() {
    let dir = tempfile::tempdir().unwrap();
    let out = etppc(&["sweep", "--scenario", SCENARIO, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = etppc(&[
        "sweep",
        "--scenario",
        SCENARIO,
        "--out",
        dir.path().to_str().unwrap(),
        "--t-end",
        "2",
        "--no-analysis",
        "--axis",
        "trigger.beta=0.02,0.05,0.1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn one_point_sweep_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = etppc(&[
        "sweep",
        "--scenario",
        SCENARIO,
        "--out",
        dir.path().to_str().unwrap(),
        "--t-end",
        "2",
        "--no-analysis",
        "--axis",
        "trigger.beta=6.67e-3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let single = tempfile::tempdir().unwrap();
    assert_eq!(code(&short_run(single.path(), &["--no-analysis"])), 0);
    let cell = fs::read_to_string(dir.path().join("cell_0000/trace.csv")).unwrap();
    let direct = fs::read_to_string(single.path().join("trace.csv")).unwrap();
    assert_eq!(cell, direct);
}
