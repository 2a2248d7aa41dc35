use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn gnforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnforge")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn gaussian() -> Value {
    json!({"family": "gaussian_mix", "terms": [{"amp": 1, "center": [0], "width": 1}]})
}

fn campaign(quad: Value, params: Value) -> Value {
    json!({
        "seed": 3,
        "functions": [{"id": "g", "func": gaussian()}],
        "points_1d": 1024,
        "dilations": [0.5, 1, 2],
        "quad": quad,
        "theorems": [{"theorem": "sobolev_gn", "params": params}],
    })
}

fn gn_params() -> Value {
    json!({"r": 1, "s": -1, "p1": 1, "q1": 1, "p2": "inf", "q2": "inf"})
}

#[test]
fn norm_prints_a_row() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", &gaussian());
    let out = gnforge(&[
        "norm", "--func", &f, "--kind", "besov", "--s", "-1", "--p", "inf", "--q", "inf", "--m", "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let row: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(row["norm_kind"], "besov");
    assert!((row["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(row["m"], 0);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"family\": \"gaussian_mix\",\n \"terms\": [}").unwrap();
    let out = gnforge(&["norm", "--func", bad.to_str().unwrap(), "--kind", "lorentz", "--p", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let f = write(dir.path(), "f.json", &gaussian());
    assert_eq!(
        gnforge(&["norm", "--func", &f, "--kind", "sobolev", "--p", "2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(gnforge(&["frobnicate"]).status.code(), Some(1));

    let cfg = write(
        dir.path(),
        "c.json",
        &json!({"theorems": [{"theorem": "gn", "params": {}}]}),
    );
    assert_eq!(
        gnforge(&["verify", "--theorem", "sobolev_gn", "--config", &cfg])
            .status
            .code(),
        Some(1)
    );
    let cfg = write(dir.path(), "c.json", &json!({"seed": 1, "extra": true}));
    assert_eq!(
        gnforge(&["sweep", "--config", &cfg, "--out", "/dev/null"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn verify_summarizes_and_skips_inadmissible_rows() {
    let dir = tempfile::tempdir().unwrap();
    let quad = json!({"mode": "auto", "per_decade": 16});
    let cfg = write(dir.path(), "ok.json", &campaign(quad.clone(), gn_params()));
    let out = gnforge(&["verify", "--theorem", "sobolev_gn", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &summary["theorems"][0];
    assert_eq!(row["ok"], 3);
    assert!(row["dilation_drift"].as_f64().unwrap() < 1e-6);

    let same = json!({"r": 1, "s": -1, "p1": 2, "q1": 2, "p2": 2, "q2": 2});
    let cfg = write(dir.path(), "skip.json", &campaign(quad, same));
    let out = gnforge(&["verify", "--theorem", "sobolev_gn", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["theorems"][0]["skipped"], 3);
}

#[test]
fn numeric_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let narrow = json!({"mode": "fixed", "hmin": 1.0, "hmax": 10.0, "nodes": 50});
    let cfg = write(dir.path(), "c.json", &campaign(narrow, gn_params()));
    let out = gnforge(&["verify", "--theorem", "sobolev_gn", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_then_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = campaign(json!({"mode": "auto", "per_decade": 16}), gn_params());
    body["checks"] = json!([{"kind": "seq_majorize", "count": 3, "delta": 0.5}]);
    let cfg = write(dir.path(), "c.json", &body);
    let report = dir.path().join("report.jsonl");
    let first = dir.path().join("first.json");
    let out = gnforge(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        report.to_str().unwrap(),
        "--summary",
        first.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&report).unwrap().lines().count(), 6);

    let second = dir.path().join("second.json");
    let plots = dir.path().join("plots");
    let out = gnforge(&[
        "report",
        "--in",
        report.to_str().unwrap(),
        "--summary",
        second.to_str().unwrap(),
        "--plots",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&first).unwrap(),
        std::fs::read_to_string(&second).unwrap()
    );
    let csv = std::fs::read_to_string(plots.join("00_sobolev_gn_dilation.csv")).unwrap();
    assert!(csv.starts_with("t,value\n"));
}
