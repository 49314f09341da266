//! End-to-end runs of the command-line front end.

use std::path::{Path, PathBuf};

use cluster_bifurc::cli::run;
use cluster_bifurc::error::AppError;
use cluster_bifurc::export::from_json;
use cluster_bifurc_core::continuation::EventKind;

const LJ_TRIANGLE: &str = r#"{
  "problem": "triangle",
  "potential": {"family": "lennard_jones", "params": {"c1": 1, "c2": 2, "delta1": 12, "delta2": 6}},
  "window": [0.3, 0.9]
}"#;

const BUCKINGHAM_TRIANGLE: &str = r#"{
  "problem": "triangle",
  "potential": {"family": "buckingham", "params": {"alpha": 1, "beta": 1, "gamma": 1, "eta": 4}},
  "window": [1, 100],
  "diagram": {"plots": [{"projection": "param_vs_component", "component": "c"}]}
}"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["cluster-bifurc"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stability_reports_agreement_with_the_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lj.json", LJ_TRIANGLE);
    let r = cli(&["stability", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("agree"), "{}", r.stdout);
    assert!(r.stdout.contains("0.58768"), "{}", r.stdout);
    assert!(tmp.path().join("stability.json").exists());
}

#[test]
fn trivial_writes_the_symmetric_states() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lj.json", LJ_TRIANGLE);
    let r = cli(&["trivial", "--config", s(&cfg), "--out", s(tmp.path()), "--set", "trivial.parameters=[0.5, 0.7]"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let records: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("trivial.json")).unwrap()).unwrap();
    assert_eq!(records.as_array().unwrap().len(), 2);
    assert_eq!(records[0]["stability"], "stable");
    assert_eq!(records[1]["stability"], "unstable");
}

#[test]
fn trace_follows_the_symmetric_branch() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lj.json", LJ_TRIANGLE);
    let r = cli(&["trace", "--config", s(&cfg), "--out", s(tmp.path()), "--set", "output.stem=trace"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("primary at A = 0.58768"), "{}", r.stdout);
    let d = from_json(&std::fs::read_to_string(tmp.path().join("trace.json")).unwrap()).unwrap();
    assert_eq!(d.branches.len(), 1);
    assert!(tmp.path().join("trace.csv").exists());
    assert!(tmp.path().join("trace_a.svg").exists());
}

#[test]
fn buckingham_diagram_has_both_primary_points() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bk.json", BUCKINGHAM_TRIANGLE);
    let r = cli(&["diagram", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let d = from_json(&std::fs::read_to_string(tmp.path().join("diagram.json")).unwrap()).unwrap();
    assert_eq!(d.events.iter().filter(|e| e.kind == EventKind::Primary).count(), 2);
    assert!(d.branches.len() >= 7, "{} branches", d.branches.len());
    assert!(tmp.path().join("diagram_c.svg").exists());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("diagram.meta.json")).unwrap()).unwrap();
    assert!(meta["generated_unix_seconds"].as_u64().unwrap() > 0);
    assert_eq!(meta["config"]["window"], serde_json::json!([1.0, 100.0]));
}

#[test]
fn repeated_diagram_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lj.json", LJ_TRIANGLE);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let r = cli(&["diagram", "--config", s(&cfg), "--out", s(&dir), "--set", "window=[0.5, 0.7]"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        outputs.push(["diagram.json", "diagram.csv"].map(|f| std::fs::read(dir.join(f)).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn verify_passes_with_and_without_a_config() {
    let r = cli(&["verify"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("PASS") && !r.stdout.contains("FAIL"), "{}", r.stdout);
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lj.json", LJ_TRIANGLE);
    let r = cli(&["verify", "--config", s(&cfg), "--set", "potential.params.c2=2.5"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
}

#[test]
fn configuration_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lj.json", LJ_TRIANGLE);
    let r = cli(&["diagram", "--config", s(&cfg), "--set", "settings.h_mx=1"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("h_mx"), "{}", r.stderr);
    let r = cli(&["diagram", "--config", s(&tmp.path().join("missing.json"))]);
    assert_eq!(r.code, 2);
    let bad = write_config(tmp.path(), "bad.json", r#"{"problem": "square"}"#);
    assert_eq!(cli(&["trivial", "--config", s(&bad)]).code, 2);
    assert_eq!(cli(&["frobnicate"]).code, 2);
    assert_eq!(cli(&["verify", "--set", "window=[1,2]"]).code, 2);
    let r = cli(&["diagram", "--config", s(&cfg), "--set", r#"diagram.plots=[{"projection":"param_vs_component","component":"q"}]"#, "--out", s(tmp.path())]);
    assert_eq!(r.code, 2, "{}", r.stderr);
}

#[test]
fn numerical_failures_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lj.json", LJ_TRIANGLE);
    let r = cli(&["trace", "--config", s(&cfg), "--out", s(tmp.path()), "--set", "trace.state=[0, 1, -1, 1]"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(r.stderr.contains("numerical"), "{}", r.stderr);
}

#[test]
fn exit_code_table() {
    assert_eq!(AppError::Config(String::new()).exit_code(), 2);
    assert_eq!(AppError::numerical("x", cluster_bifurc_core::Error::DomainExit).exit_code(), 3);
    assert_eq!(AppError::Verification(String::new()).exit_code(), 4);
}

#[test]
fn help_and_version_exit_with_0() {
    let r = cli(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("diagram"));
    assert_eq!(cli(&["--version"]).code, 0);
}
