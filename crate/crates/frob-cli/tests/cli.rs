//! End-to-end tests of the frob binary: exit codes, report schema,
//! determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn frob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frob"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("frob-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn examples_lists_seven() {
    let out = frob(&["examples"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["examples"].as_array().unwrap().len(), 7);
    assert_eq!(v["schema_version"], 1);
    let six = v["examples"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["name"] == "six-dim")
        .unwrap();
    assert_eq!(six["dimension"], 6);
}

#[test]
fn unknown_example_is_input_error() {
    let out = frob(&["report", "--example", "does-not-exist"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_classes_and_exit_codes() {
    let out = frob(&["validate", "--example", "p1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["dimension"], 2);
    assert_eq!(v["class"], "AdmissibleFlatUnit");

    let out = frob(&["validate", "--example", "nonflat"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["class"], "AdmissibleNonflatUnit");
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("nonflat"),
        "a nonflat-unit warning is emitted"
    );

    // Inadmissible: s=0 with a pole at the origin.
    let cfg = tmp("inadmissible.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\n[spec]\ns = 0\nzeros = 4\nm0 = 1\npole_multiplicities = []\n",
    )
    .unwrap();
    let out = frob(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["class"], "Inadmissible");
    assert!(!v["violations"].as_array().unwrap().is_empty());
    std::fs::remove_file(cfg).ok();
}

#[test]
fn corrupted_config_exits_2_without_partial_report() {
    let cfg = tmp("corrupt.toml");
    std::fs::write(&cfg, "schema_version = 1\n[spec\nbroken").unwrap();
    let report_path = tmp("corrupt-report.json");
    let out = frob(&[
        "report",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!report_path.exists(), "no partial report may be written");
    std::fs::remove_file(cfg).ok();
}

#[test]
fn report_on_p1_passes_and_is_deterministic() {
    let a_path = tmp("p1-a.json");
    let b_path = tmp("p1-b.json");
    for p in [&a_path, &b_path] {
        let out = frob(&[
            "report",
            "--example",
            "p1",
            "--seed",
            "9",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&a_path).unwrap();
    let b = std::fs::read(&b_path).unwrap();
    assert_eq!(a, b, "reports must be byte-identical for a fixed seed");
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["report"]["unit_flat"], true);
    assert_eq!(v["oracle"]["pass"], true);
    for verdict in v["report"]["verdicts"].as_array().unwrap() {
        assert_eq!(verdict["pass"], true, "{verdict}");
    }
    std::fs::remove_file(a_path).ok();
    std::fs::remove_file(b_path).ok();
}

#[test]
fn report_from_config_file() {
    let cfg = tmp("p1-config.toml");
    std::fs::write(
        &cfg,
        r#"
schema_version = 1

[spec]
s = 1
zeros = 2
m0 = 1
pole_multiplicities = []

[coordinates.partial_fraction]
polynomial = [[0.8, 0.1], [1.0, 0.0]]
origin = [[1.2, -0.3]]

[run]
seed = 11
"#,
    )
    .unwrap();
    let out = frob(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 11);
    assert!(v["oracle"].is_null(), "config runs carry no oracle");
    std::fs::remove_file(cfg).ok();
}

#[test]
fn absurd_tolerance_fails_with_exit_4_but_writes_report() {
    let report_path = tmp("tight.json");
    let out = frob(&[
        "report",
        "--example",
        "p1",
        "--tol",
        "1e-20",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(report_path.exists(), "report is written even on failure");
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert!(v["report"]["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .any(|x| x["pass"] == false));
    std::fs::remove_file(report_path).ok();
}

#[test]
fn report_on_a3_passes() {
    let out = frob(&["report", "--example", "a3"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["oracle"]["pass"], true);
    assert_eq!(v["report"]["euler"]["d"], serde_json::json!({"num": 1, "den": 2}));
}

#[test]
fn nonflat_report_is_flagged() {
    let out = frob(&["report", "--example", "nonflat"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["unit_flat"], false);
}

#[test]
fn sweep_is_deterministic_and_aggregates() {
    let a_path = tmp("sweep-a.json");
    let b_path = tmp("sweep-b.json");
    for p in [&a_path, &b_path] {
        let out = frob(&[
            "sweep",
            "--example",
            "p1",
            "--points",
            "3",
            "--seed",
            "5",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = std::fs::read(&a_path).unwrap();
    let b = std::fs::read(&b_path).unwrap();
    assert_eq!(a, b, "sweep output must be byte-identical for a fixed seed");
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["requested_points"], 3);
    assert_eq!(v["reports"].as_array().unwrap().len(), 3);
    assert_eq!(v["all_pass"], true);
    assert!(v["aggregate_max_residuals"]["wdvv"].as_f64().unwrap() < 1e-6);
    std::fs::remove_file(a_path).ok();
    std::fs::remove_file(b_path).ok();
}

#[test]
fn timing_flag_is_opt_in() {
    let out = frob(&["report", "--example", "p1", "--timing"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["timing_ms"].is_number());
    let out = frob(&["report", "--example", "p1"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.get("timing_ms").is_none());
}
