use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_score-bench"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{
    "schema_version": 1, "n": 8, "k": 2, "T": 50,
    "policy": {"kind": "score"},
    "adversary": {"kind": "modular-drift", "g_bound": 1.0},
    "seed": 1, "replicas": 2
}"#;

#[test]
fn run_writes_csvs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let res = bench(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--replicas",
        "3",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    for i in 0..3 {
        let text = std::fs::read_to_string(out.join(format!("replica_{i:03}.csv"))).unwrap();
        assert!(text.starts_with("round,reward,full_reward,cum_reward,cum_benchmark,aug_regret,static_regret,observed,cum_cost\n"));
        assert_eq!(text.lines().count(), 51);
    }
    let summary: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(summary["replicas"].as_array().unwrap().len(), 3);
    assert!(out.join("summary.json").exists());
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = bench(&["run", "--config", &cfg, "--seed", "5"]);
    let b = bench(&["run", "--config", &cfg, "--seed", "5"]);
    let c = bench(&["run", "--config", &cfg, "--seed", "6"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn bad_configs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("\"seed\": 1", "\"seed\": 1, \"extra\": true"),
    );
    let res = bench(&["run", "--config", &cfg]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("extra"));
    assert!(!bench(&["run", "--config", "/nonexistent/config.json"])
        .status
        .success());
}

#[test]
fn verify_small() {
    let res = bench(&["verify", "--max-n", "4"]);
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("PASS projection"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn sweep_prints_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let res = bench(&[
        "sweep", "--config", &cfg, "--axis", "T", "--values", "20,40,80",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = String::from_utf8_lossy(&res.stdout);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("T,20,2,"));
    assert!(
        !bench(&["sweep", "--config", &cfg, "--axis", "epsilon", "--values", "0.1"])
            .status
            .success()
    );
    assert!(
        !bench(&["sweep", "--config", &cfg, "--axis", "bogus", "--values", "1"])
            .status
            .success()
    );
}

#[test]
fn lower_bound_ensemble() {
    let res = bench(&[
        "lower-bound",
        "--n",
        "6",
        "--k",
        "2",
        "--T",
        "500",
        "--replicas",
        "40",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stdout)
    );
    let report: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(report["consistent"], true);
}
