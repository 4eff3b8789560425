use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn cgalab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgalab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn quick_verify_passes_fast() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = cgalab(dir.path(), &["verify", "--cases", "10"]);
    assert!(start.elapsed() < Duration::from_secs(10));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("lemma,case_id,lhs,rhs,holds"));
    assert!(!csv.contains(",false"));
}

#[test]
fn injected_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = cgalab(dir.path(), &["verify", "--cases", "10", "--inject-violation"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("injected_violation"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kind": "upper_scaling", "replicates": 0}"#).unwrap();
    assert_eq!(code(&cgalab(dir.path(), &["--config", bad.to_str().unwrap(), "verify"])), 2);

    let mismatch = dir.path().join("mismatch.json");
    std::fs::write(&mismatch, r#"{"kind": "verify_suite", "cases": 10}"#).unwrap();
    assert_eq!(code(&cgalab(dir.path(), &["--config", mismatch.to_str().unwrap(), "parallel"])), 2);

    assert_eq!(code(&cgalab(dir.path(), &["--config", "/nonexistent/cfg.json", "verify"])), 2);
    assert_eq!(code(&cgalab(dir.path(), &["sweep", "--kind", "sideways"])), 2);
    assert_eq!(code(&cgalab(dir.path(), &["run", "--n", "3"])), 2);
}

#[test]
fn config_file_drives_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("verify.json");
    std::fs::write(&cfg, r#"{"kind": "verify_suite", "cases": 5, "master_seed": 7}"#).unwrap();
    let o = cgalab(dir.path(), &["--config", cfg.to_str().unwrap(), "verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("verify.csv").exists());
}

#[test]
fn run_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = cgalab(
        dir.path(),
        &["--seed", "3", "run", "--n", "20", "--k", "2", "--mu", "20", "--budget", "5000", "--stride", "50"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(summary.get("iterations_used").is_some(), "{summary}");
    let trace = std::fs::read_to_string(dir.path().join("run_trace.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["t"], 0);
}

#[test]
fn oracle_pmf_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = cgalab(dir.path(), &["oracle", "pmf", "--f", "0.5,0.5"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["probs"], serde_json::json!([0.25, 0.5, 0.25]));
}

#[test]
fn quick_parallel_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&cgalab(a.path(), &["--quick", "--threads", "1", "parallel"])), 0);
    assert_eq!(code(&cgalab(b.path(), &["--quick", "--threads", "3", "parallel"])), 0);
    for name in ["parallel_log.csv", "parallel_tail.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}
