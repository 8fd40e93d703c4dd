use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tensorhar"))
        .args(args)
        .env_remove("TENSORHAR_DATA")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn error_kind(out: &Output) -> String {
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON error");
    err["error"]["kind"].as_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn synth_uci(dir: &Path) -> String {
    let data = dir.join("data");
    let out = run(&["synth-data", "--kind", "uci", "--out", data.to_str().unwrap(), "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["train", "--kernel", "poly"]).status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_a_json_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "train", "sead": 3}"#).unwrap();
    let out = run(&["train", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "config");
    assert!(String::from_utf8_lossy(&out.stderr).contains("sead"));
}

#[test]
fn missing_data_root_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["train", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    serde_json::from_slice::<Value>(&out.stderr).expect("stderr is a JSON error");
    // The resolved configuration is persisted even when the run fails.
    assert!(dir.path().join("o/resolved_config.json").exists());
}

#[test]
fn misspelled_hyperparameter_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_uci(dir.path());
    let out = run(&[
        "train",
        "--data",
        &data,
        "--model",
        "forest",
        "--param",
        "max_dpeth=4",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_dpeth"));
}

#[test]
fn train_evaluate_report_flow() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_uci(dir.path());
    let train_dir = dir.path().join("train");
    let out =
        run(&["train", "--data", &data, "--model", "logreg", "--seed", "9", "--out", train_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["resolved_config.json", "model.json", "report.json", "report.txt", "confusion.csv"] {
        assert!(train_dir.join(file).exists(), "{file}");
    }
    let resolved = read_json(&train_dir.join("resolved_config.json"));
    assert_eq!(resolved["seed"], 9);
    let report = read_json(&train_dir.join("report.json"));

    let eval_dir = dir.path().join("eval");
    let model = train_dir.join("model.json");
    let out = run(&[
        "evaluate",
        "--data",
        &data,
        "--model-file",
        model.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let again = read_json(&eval_dir.join("report.json"));
    assert!(report["report"]["accuracy"].is_f64());
    assert_eq!(report["report"]["accuracy"], again["report"]["accuracy"]);

    let report_dir = dir.path().join("report");
    let out = run(&["report", train_dir.to_str().unwrap(), "--out", report_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["comparison.txt", "comparison.json", "comparison.csv"] {
        assert!(report_dir.join(file).exists(), "{file}");
    }
}

#[test]
fn outputs_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_uci(dir.path());
    let mut reports = Vec::new();
    for jobs in ["1", "3"] {
        let o = dir.path().join(format!("j{jobs}"));
        let out = run(&["train", "--data", &data, "--model", "forest", "--jobs", jobs, "--out", o.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push((std::fs::read(o.join("model.json")).unwrap(), std::fs::read(o.join("report.json")).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
}
