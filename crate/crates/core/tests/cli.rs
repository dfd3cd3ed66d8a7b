//! Exit codes and artifacts of the command-line driver.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_krylov-accel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn list_solvers_names_every_method() {
    let out = run(&["list-solvers"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["tgcr", "gmres", "nltgcr", "aa", "stochastic_nltgcr", "subsampled_newton"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name} missing");
    }
}

#[test]
fn successful_run_writes_traces_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem": {"family": "spd", "n": 30, "cond": 50.0},
            "solvers": [{"method": "tgcr"}, {"method": "cg"}],
            "repetitions": 2}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["run", &cfg, "--out-dir", out_dir.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["tgcr_seed3.csv", "tgcr_seed4.csv", "cg_seed3.csv", "summary.csv", "manifest.json"] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([3, 4]));
}

#[test]
fn summary_trace_level_skips_per_iteration_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem": {"family": "spd", "n": 10, "cond": 5.0}, "solvers": [{"method": "tgcr"}]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["run", &cfg, "--out-dir", out_dir.to_str().unwrap(), "--trace-level", "summary"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("summary.csv").is_file());
    assert!(!out_dir.join("tgcr_seed0.csv").exists());
}

#[test]
fn unknown_solver_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem": {"family": "spd", "n": 10, "cond": 5.0}, "solvers": [{"method": "bicgstab"}]}"#,
    );
    let out = run(&["run", &cfg, "--out-dir", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bicgstab") && err.contains("tgcr"), "{err}");
}

#[test]
fn malformed_and_missing_configs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{ not json");
    assert_eq!(run(&["run", &cfg]).status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    assert_eq!(run(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
    let unknown_field = write_config(
        dir.path(),
        r#"{"problem": {"family": "spd", "n": 10, "cond": 5.0}, "solvers": [{"method": "tgcr", "mm": 3}]}"#,
    );
    assert_eq!(run(&["run", &unknown_field]).status.code(), Some(2));
}

#[test]
fn diverging_solver_exits_3_and_keeps_other_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    // A step far beyond 2 / lambda_max drives gradient descent to overflow.
    let cfg = write_config(
        dir.path(),
        r#"{"problem": {"family": "spd", "n": 20, "cond": 10.0},
            "solvers": [{"method": "tgcr"}, {"method": "gd", "step": 1000.0, "max_iter": 5000}]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["run", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("tgcr_seed0.csv").is_file());
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("gd,") && l.contains(",failed,")), "{summary}");
}

#[test]
fn gen_problem_writes_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    let out = run(&["gen-problem", "spd", "n=12", "cond=20", "--out", path.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix"));

    // The written file loads back as a problem.
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"problem": {{"family": "matrix_market", "path": {:?}}}, "solvers": [{{"method": "gmres"}}]}}"#,
            path.display().to_string()
        ),
    );
    let out = run(&["run", &cfg, "--out-dir", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_problem_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    let p = path.to_str().unwrap();
    assert_eq!(run(&["gen-problem", "spd", "n=12", "--out", p]).status.code(), Some(2));
    assert_eq!(run(&["gen-problem", "nope", "n=12", "--out", p]).status.code(), Some(2));
    assert_eq!(run(&["gen-problem", "spd", "n=12", "cond=abc", "--out", p]).status.code(), Some(2));
}

#[test]
fn thread_count_env_is_validated_and_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem": {"family": "quadratic_sum", "d": 6, "samples": 50, "mu": 1.0, "l": 2.0},
            "solvers": [{"method": "stochastic_nltgcr", "m": 2, "max_iter": 10}], "repetitions": 3}"#,
    );
    let bad = bin().args(["run", &cfg]).env("KRYLOV_ACCEL_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let mut summaries = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("out{threads}"));
        let out = bin()
            .args(["run", &cfg, "--out-dir", out_dir.to_str().unwrap()])
            .env("KRYLOV_ACCEL_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        summaries.push(std::fs::read(out_dir.join("summary.csv")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
}
