//! Golden-file coverage for every CLI command, plus the config-error paths.
//!
//! CSV output is compared byte for byte. JSON summaries are compared as
//! values with the wall-time metadata field zeroed on both sides.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_qinfo")
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run_ok(command: &str, config: &str, out: &Path) {
    let status = Command::new(binary())
        .arg(command)
        .arg("--config")
        .arg(repo_file(config))
        .arg("--out")
        .arg(out)
        .status()
        .expect("binary runs");
    assert!(status.success(), "{command} exited with {status}");
}

fn normalized_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).expect("json readable");
    let mut value: serde_json::Value = serde_json::from_str(&text).expect("valid json");
    value["wall_time_ms"] = serde_json::json!(0);
    value
}

fn check_command(command: &str) {
    let dir = tempfile::tempdir().expect("tempdir");
    run_ok(command, &format!("tests/configs/{command}.json"), dir.path());

    let actual_csv = std::fs::read(dir.path().join(format!("{command}.csv"))).unwrap();
    let golden_csv = std::fs::read(repo_file(&format!("tests/golden/{command}.csv"))).unwrap();
    assert_eq!(
        actual_csv,
        golden_csv,
        "{command}: CSV differs from golden file"
    );

    let actual = normalized_json(&dir.path().join(format!("{command}.json")));
    let golden = normalized_json(&repo_file(&format!("tests/golden/{command}.json")));
    assert_eq!(actual, golden, "{command}: JSON differs from golden file");
}

#[test]
fn golden_qfi() {
    check_command("qfi");
}

#[test]
fn golden_fisher() {
    check_command("fisher");
}

#[test]
fn golden_chain() {
    check_command("chain");
}

#[test]
fn golden_attain() {
    check_command("attain");
}

#[test]
fn golden_classify() {
    check_command("classify");
}

#[test]
fn golden_simulate() {
    check_command("simulate");
}

#[test]
fn golden_sweep() {
    check_command("sweep");
}

#[test]
fn curve_model_pipeline_on_equator_fixture() {
    // qfi, chain, and attain all accept a sampled curve; on the equator
    // fixture the numeric tangents have magnitude sin(h)/h < 1, so the
    // information is constant but slightly below the analytic value 1.
    let dir = tempfile::tempdir().unwrap();
    let fixture = repo_file("tests/fixtures/equator.csv");
    let write_config = |name: &str, body: String| {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    };
    let model = format!(r#""model": {{"kind": "curve_csv", "path": "{}"}}"#, fixture.display());

    let qfi_cfg = write_config("qfi.json", format!(r#"{{"command": "qfi", {model}}}"#));
    let out = Command::new(binary())
        .args(["qfi", "--config"])
        .arg(&qfi_cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(out.success());
    let csv = std::fs::read_to_string(dir.path().join("qfi.csv")).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 24);
    let h = std::f64::consts::TAU / 24.0;
    let expected = (h.sin() / h).powi(2);
    for v in &values {
        assert!((v - expected).abs() < 1e-9, "qfi {v} vs {expected}");
    }

    let attain_cfg = write_config(
        "attain.json",
        format!(
            r#"{{"command": "attain", {model}, "povm": {{"kind": "in_plane", "azimuth": 0.37}}}}"#
        ),
    );
    let out = Command::new(binary())
        .args(["attain", "--config"])
        .arg(&attain_cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("attain.json")).unwrap())
            .unwrap();
    assert_eq!(summary["details"]["uniform"], serde_json::json!(true));
    assert_eq!(
        summary["details"]["curve_class"],
        serde_json::json!("great_circle")
    );

    let fisher_cfg = write_config(
        "fisher.json",
        format!(
            r#"{{"command": "fisher", {model}, "povm": {{"kind": "in_plane", "azimuth": 0.37}}}}"#
        ),
    );
    let out = Command::new(binary())
        .args(["fisher", "--config"])
        .arg(&fisher_cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("fisher.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let fisher: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((fisher - expected).abs() < 1e-9);
    }

    let chain_cfg = write_config(
        "chain.json",
        format!(
            r#"{{"command": "chain", {model}, "povm": {{"kind": "in_plane", "azimuth": 0.37}}}}"#
        ),
    );
    let out = Command::new(binary())
        .args(["chain", "--config"])
        .arg(&chain_cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("chain.json")).unwrap())
            .unwrap();
    let max_slack = summary["details"]["max_total_slack"].as_f64().unwrap();
    assert!(max_slack.abs() <= 1e-8, "in-plane chain slack {max_slack}");
}

#[test]
fn classify_nonplanar_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"command": "classify", "model": {{"kind": "curve_csv", "path": "{}"}}}}"#,
            repo_file("tests/fixtures/tilted.csv").display()
        ),
    )
    .unwrap();
    let out = Command::new(binary())
        .arg("classify")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("classify.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("non_planar,"));
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    // Plan is missing `n`.
    std::fs::write(
        &config,
        r#"{
            "command": "simulate",
            "model": { "kind": "example", "eta": 1.0 },
            "plan": { "replications": 4, "seed": 1, "strategy": "two_stage", "theta_true": 0.5 }
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = Command::new(binary())
        .arg("simulate")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!out_dir.join("simulate.csv").exists());
    assert!(!out_dir.join("simulate.json").exists());
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{
            "command": "qfi",
            "model": { "kind": "example", "eta": 1.0 },
            "surprise": true
        }"#,
    )
    .unwrap();
    let out = Command::new(binary())
        .arg("qfi")
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn command_mismatch_exits_2() {
    let out = Command::new(binary())
        .arg("fisher")
        .arg("--config")
        .arg(repo_file("tests/configs/qfi.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_override_changes_results() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&dir_a, "7"), (&dir_b, "8")] {
        let status = Command::new(binary())
            .arg("simulate")
            .arg("--config")
            .arg(repo_file("tests/configs/simulate.json"))
            .arg("--seed")
            .arg(seed)
            .arg("--out")
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    // Seed 7 matches the config default, so it reproduces the golden CSV.
    let a = std::fs::read(dir_a.path().join("simulate.csv")).unwrap();
    let golden = std::fs::read(repo_file("tests/golden/simulate.csv")).unwrap();
    assert_eq!(a, golden);
    let b = std::fs::read(dir_b.path().join("simulate.csv")).unwrap();
    assert_ne!(a, b, "different seeds must give different counts");
}

#[test]
fn seed_override_without_plan_exits_2() {
    let out = Command::new(binary())
        .arg("qfi")
        .arg("--config")
        .arg(repo_file("tests/configs/qfi.json"))
        .arg("--seed")
        .arg("3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&dir_a, "1"), (&dir_b, "4")] {
        let status = Command::new(binary())
            .arg("simulate")
            .arg("--config")
            .arg(repo_file("tests/configs/simulate.json"))
            .arg("--threads")
            .arg(threads)
            .arg("--out")
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir_a.path().join("simulate.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("simulate.csv")).unwrap();
    assert_eq!(a, b, "results must not depend on the thread pool size");
}

#[test]
fn thread_env_fallback_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(binary())
        .arg("simulate")
        .arg("--config")
        .arg(repo_file("tests/configs/simulate.json"))
        .arg("--out")
        .arg(dir.path())
        .env("QINFO_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read(dir.path().join("simulate.csv")).unwrap();
    let golden = std::fs::read(repo_file("tests/golden/simulate.csv")).unwrap();
    assert_eq!(csv, golden);

    // A malformed value is a configuration error.
    let out = Command::new(binary())
        .arg("simulate")
        .arg("--config")
        .arg(repo_file("tests/configs/simulate.json"))
        .env("QINFO_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
