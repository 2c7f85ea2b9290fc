//! Exit-code and interface behavior of the binary.

use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_kvn-forms")
}

#[test]
fn corrupted_metric_fails_with_named_identity() {
    let dir = tempfile::tempdir().unwrap();
    // serialize the SvH metric, corrupt one diagonal entry
    let metric = kvn_forms::metrics::svh_metric(&kvn_forms::Algebra::new(1));
    let mut doc = metric.to_json();
    doc = doc.replace("[\n      [\n        1.0,\n        0.0\n      ],", "[\n      [\n        2.0,\n        0.0\n      ],");
    let path = dir.path().join("bad_metric.json");
    std::fs::write(&path, &doc).unwrap();
    let out_path = dir.path().join("report.json");
    let output = Command::new(bin())
        .args([
            "identities",
            "--n",
            "1",
            "--metric-file",
            path.to_str().unwrap(),
            "--metric-name",
            "svh",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "corrupted metric must exit 1");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("svh"), "failure names the identity: {stderr}");
    let report = std::fs::read_to_string(&out_path).unwrap();
    assert!(report.contains("\"pass\": false"));
}

#[test]
fn clean_identities_run_exits_zero() {
    let status = Command::new(bin())
        .args(["identities", "--n", "1"])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    let output = Command::new(bin()).args(["identities", "--bogus-flag"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    // an unparsable potential is a usage-class error as well
    let output = Command::new(bin())
        .args(["lyapunov", "--potential", "q ^ 1.5", "--t", "5"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn config_file_fills_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"omega": 2.0, "n_theta": 8}"#).unwrap();
    let out = Command::new(bin())
        .args(["--config", config.to_str().unwrap(), "spectrum"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let vals: Vec<f64> = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(vals.len(), 8);
    assert!((vals.iter().cloned().fold(f64::MIN, f64::max) - 6.0).abs() < 1e-9);
    // flag overrides the config value
    let out = Command::new(bin())
        .args(["--config", config.to_str().unwrap(), "spectrum", "--omega", "1.0"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    let vals: Vec<f64> = serde_json::from_str(text.trim()).unwrap();
    assert!((vals.iter().cloned().fold(f64::MIN, f64::max) - 3.0).abs() < 1e-9);
}

#[test]
fn metric_file_with_wrong_dimension_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let metric = kvn_forms::metrics::svh_metric(&kvn_forms::Algebra::new(1));
    let path = dir.path().join("n1.json");
    std::fs::write(&path, metric.to_json()).unwrap();
    let out = Command::new(bin())
        .args([
            "hermiticity",
            "--n",
            "2",
            "--metric",
            &format!("file:{}", path.display()),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("n = 1"), "{stderr}");
}

#[test]
fn metric_json_round_trips_through_file_argument() {
    let dir = tempfile::tempdir().unwrap();
    let metric = kvn_forms::metrics::symplectic_metric(&kvn_forms::Algebra::new(1));
    let path = dir.path().join("symplectic.json");
    std::fs::write(&path, metric.to_json()).unwrap();
    let out = Command::new(bin())
        .args([
            "hermiticity",
            "--n",
            "1",
            "--metric",
            &format!("file:{}", path.display()),
            "--samples",
            "4",
            "--seed",
            "7",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let report: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    for row in report["rows"].as_array().unwrap() {
        assert!(row["residual"].as_f64().unwrap() < 1e-12);
    }
}
