use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn serrin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_serrin")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn radial_flat_unit_disk() {
    let out = serrin(&["radial", "--K", "0", "--n", "2", "--R", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["c"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!((v["v0"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    assert!(v["poho_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn identities_on_the_sphere() {
    let out = serrin(&["identities", "--K", "1", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-10);
    assert!(v["obata_sup_error"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn hyperbolic_flag_accepts_negative_value() {
    let out = serrin(&["radial", "--K", "-1", "--R", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let c = stdout_json(&out)["c"].as_f64().unwrap();
    assert!((c - (1.0f64).tanh() / 2.0).abs() < 1e-12);
}

#[test]
fn validation_errors_exit_two_with_code_prefix() {
    for args in [
        &["radial", "--K", "2"][..],
        &["radial", "--R", "-1"],
        &["solve", "--K", "1", "--R", "1.6", "--level", "5"],
        &["verify", "--n", "3"],
        &["scan", "--eps", "0.1,0.05"],
        &["descent", "--coeffs", "1:0.1"],
    ] {
        let out = serrin(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = stderr(&out);
        assert!(err.starts_with("E_CONFIG: "), "{args:?}: {err}");
        assert_eq!(err.lines().count(), 1);
    }
    let err = stderr(&serrin(&["radial", "--K", "2"]));
    assert!(err.contains("K must be -1, 0, or 1"));
}

#[test]
fn self_intersecting_domain_is_a_domain_error() {
    let out = serrin(&["verify", "--coeffs", "3:1.5", "--level", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("E_DOMAIN: "));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = serrin(&["plot"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("E_USAGE: "));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"K": -1, "n": 2, "R": 3.0}"#).unwrap();
    let out = serrin(&["radial", "--config", cfg.to_str().unwrap(), "--R", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["K"], -1);
    assert_eq!(v["R"].as_f64(), Some(2.0));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"K": 0, "radius": 1.0}"#).unwrap();
    let out = serrin(&["radial", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("E_CONFIG: invalid value for config"));
    assert!(err.contains("radius"));
}

#[test]
fn missing_config_file_is_io_error() {
    let out = serrin(&["radial", "--config", "/nonexistent/run.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E_IO: "));
}

#[test]
fn solve_writes_documented_csvs_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = serrin(&[
            "solve",
            "--K",
            "-1",
            "--coeffs",
            "3:0.1",
            "--level",
            "1",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for name in ["field.csv", "boundary.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert_eq!(header(&a.path().join("field.csv")), "x,y,v,P,grad_norm_g");
    assert_eq!(header(&a.path().join("boundary.csv")), "theta,rho,grad_norm_g,P");

    let field = fs::read_to_string(a.path().join("field.csv")).unwrap();
    for line in field.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 5);
        assert!(cols.iter().all(|c| c.is_finite()));
        assert!(cols[2] >= 0.0);
    }
}

#[test]
fn verify_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = serrin(&["verify", "--level", "2", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let file: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(file, stdout_json(&out));
    for key in ["c_mean", "c_std", "P_boundary_max", "P_interior_max", "P_min", "pohozaev_relative_residual"] {
        assert!(file[key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert!(file["linf_error"].as_f64().unwrap() < 2e-3);
    assert!((file["c_mean"].as_f64().unwrap() - 0.5).abs() < 1e-2);
}

#[test]
fn scan_and_descent_csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = serrin(&["scan", "--level", "0", "--eps", "0,0.1", "--out-dir", d]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(header(&dir.path().join("scan.csv")), "eps,c_mean,c_std,P_range,poho_residual");
    assert_eq!(fs::read_to_string(dir.path().join("scan.csv")).unwrap().lines().count(), 3);

    let out = serrin(&["descent", "--level", "0", "--coeffs", "2:0.1", "--max-iters", "3", "--out-dir", d]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(header(&dir.path().join("descent.csv")), "iter,J,coeff_norm");
}

#[test]
fn scan_row_failure_still_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = serrin(&["scan", "--level", "0", "--eps", "0,1.5", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let csv = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().nth(2), Some("1.5,,,,"));
}
