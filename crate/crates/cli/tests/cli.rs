use std::f64::consts::{FRAC_PI_4, PI};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use ucap::canonical::{canonical_unitary, WeylVector};
use ucap::linalg::{haar_random_unitary, CMatrix, MatrixJson, UnitaryMatrix, C64};
use ucap::oracle::shard_rng;

fn ucap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucap")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write_matrix(dir: &TempDir, name: &str, m: &CMatrix) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string(&MatrixJson::from_matrix(m)).unwrap()).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn d_of(v: &Value) -> [f64; 3] {
    [f(&v["alpha_x"]), f(&v["alpha_y"]), f(&v["alpha_z"])]
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr line");
    serde_json::from_str(line).expect("machine-parsable error")
}

fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, c)] = C64::new(1.0, 0.0);
    }
    m
}

#[test]
fn analyze_identity() {
    let dir = TempDir::new().unwrap();
    let path = write_matrix(&dir, "id.json", &CMatrix::identity(4, 4));
    let r = stdout_json(&ucap(&["analyze", p(&path), "--json"]));
    assert!(d_of(&r["canonical"]["d"]).iter().all(|a| a.abs() < 1e-12));
    assert!(f(&r["capacities"]["c_max_prod"]).abs() < 1e-12);
    assert!((f(&r["d_min"]["closed"]) - 1.0).abs() < 1e-12);
    assert!(f(&r["canonical"]["residual"]) <= 1e-12);
    for q in r["quadratic"].as_array().unwrap() {
        assert!(f(&q["residual"]) <= 1e-12);
    }
    assert_eq!(r["input_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn analyze_cnot() {
    let dir = TempDir::new().unwrap();
    let path = write_matrix(&dir, "cnot.json", &cnot());
    let r = stdout_json(&ucap(&["analyze", p(&path), "--json"]));
    let d = d_of(&r["canonical"]["d"]);
    assert!((d[0] - FRAC_PI_4).abs() < 1e-9 && d[1].abs() < 1e-9 && d[2].abs() < 1e-9);
    assert_eq!(r["capacities"]["perfect_entangler"], Value::Bool(true));
}

#[test]
fn analyze_canonical_pi_over_8_with_oracle() {
    let dir = TempDir::new().unwrap();
    let u = canonical_unitary(&WeylVector::new(PI / 8.0, 0.0, 0.0));
    let path = write_matrix(&dir, "ud.json", u.matrix());
    let r = stdout_json(&ucap(&["analyze", p(&path), "--json", "--numeric", "--grid", "12", "--restarts", "8"]));
    assert!((f(&r["capacities"]["c_max_prod"]) - 0.5f64.sqrt()).abs() < 1e-9);
    assert!((f(&r["d_min"]["closed"]) - 0.5f64.sqrt()).abs() < 1e-9);
    assert!((f(&r["d_min"]["numeric"]) - 0.5f64.sqrt()).abs() < 1e-6);
    for q in r["quadratic"].as_array().unwrap() {
        let tol = if q["route"] == "numeric" { 1e-3 } else { 1e-12 };
        assert!(f(&q["residual"]) <= tol, "{q}");
    }
    assert!(f(&r["relations"]["collective"]["relation_residual"]) <= 1e-3);
    assert!(f(&r["relations"]["first_order"]["relation_residual"]) <= 1e-3);
}

#[test]
fn analyze_is_reproducible_apart_from_timings() {
    let dir = TempDir::new().unwrap();
    let mut rng = shard_rng(11, 0);
    let u = haar_random_unitary(4, &mut rng).unwrap();
    let path = write_matrix(&dir, "u.json", u.matrix());
    let args = ["analyze", p(&path), "--json", "--numeric", "--grid", "8", "--restarts", "4", "--seed", "5"];
    let mut a = stdout_json(&ucap(&args));
    let mut b = stdout_json(&ucap(&args));
    a.as_object_mut().unwrap().remove("timings");
    b.as_object_mut().unwrap().remove("timings");
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn decompose_ignores_local_dressing() {
    let dir = TempDir::new().unwrap();
    let d = WeylVector::new(0.6, 0.35, -0.2);
    let mut rng = shard_rng(4, 0);
    let mut local = || haar_random_unitary(2, &mut rng).unwrap();
    let left = local().kron(&local()).unwrap();
    let right = local().kron(&local()).unwrap();
    let plain = canonical_unitary(&d);
    let dressed = left.multiply(&plain).unwrap().multiply(&right).unwrap();
    let a = stdout_json(&ucap(&["decompose", p(&write_matrix(&dir, "a.json", plain.matrix())), "--json"]));
    let b = stdout_json(&ucap(&["decompose", p(&write_matrix(&dir, "b.json", dressed.matrix())), "--json"]));
    for k in 0..3 {
        assert!((f(&a["d"][k]) - f(&b["d"][k])).abs() < 1e-9);
        assert!((f(&a["d"][k]) - d.as_array()[k]).abs() < 1e-9);
    }
    for key in ["XA", "XB", "YA", "YB", "global_phase", "residual"] {
        assert!(b.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn verify_batch_passes_and_writes_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("rows.csv");
    let out = ucap(&["verify", "--trials", "1000", "--seed", "7", "--routes", "closed,geometric", "--out", p(&csv), "--json"]);
    let s = stdout_json(&out);
    assert_eq!(s["pass"], Value::Bool(true));
    for r in s["routes"].as_array().unwrap() {
        assert!(f(&r["max_residual"]) <= 1e-9);
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert!(text.starts_with("trial,alpha_x"));
}

#[test]
fn verify_numeric_route() {
    let s = stdout_json(&ucap(&["verify", "--trials", "10", "--routes", "numeric", "--seed", "2", "--json"]));
    assert!(f(&s["max_oracle_gap"]) <= 1e-3);
}

#[test]
fn verify_fails_with_exit_1_when_tolerance_is_impossible() {
    let out = ucap(&["verify", "--trials", "20", "--seed", "3", "--tol=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "verify_failed");
}

#[test]
fn usage_and_input_errors() {
    let out = ucap(&["verify", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["exit"], 2);

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 4, \"entries\": [[1]]}").unwrap();
    let out = ucap(&["analyze", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "malformed_input");

    let mut m = CMatrix::identity(4, 4);
    m[(0, 0)] = C64::new(1.1, 0.0);
    let out = ucap(&["analyze", p(&write_matrix(&dir, "nu.json", &m))]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "not_unitary");

    let out = ucap(&["analyze", p(&write_matrix(&dir, "q.json", &CMatrix::identity(2, 2)))]);
    assert_eq!(out.status.code(), Some(2));

    let out = ucap(&["analyze", p(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn random_weyl_lies_in_chamber() {
    let s = stdout_json(&ucap(&["random", "--weyl", "--count", "50", "--seed", "9"]));
    for v in s.as_array().unwrap() {
        let WeylVector { alpha_x, alpha_y, alpha_z } = WeylVector::from_array(d_of(v));
        assert!(alpha_z.abs() <= alpha_y && alpha_y <= alpha_x && alpha_x <= FRAC_PI_4);
    }
}

#[test]
fn random_matrices_feed_back_into_analyze() {
    let dir = TempDir::new().unwrap();
    let out = ucap(&["random", "--count", "3", "--dir", p(dir.path()), "--seed", "1"]);
    assert!(out.status.success());
    for i in 0..3 {
        let path = dir.path().join(format!("unitary_{i:04}.json"));
        let m: MatrixJson = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let u: UnitaryMatrix = m.to_unitary(1e-10).unwrap();
        assert_eq!(u.dim(), 4);
        assert!(ucap(&["analyze", p(&path)]).status.success());
    }
}

#[test]
fn capacities_for_pi_over_8() {
    let s = stdout_json(&ucap(&["capacities", "--d", "0.3927,0,0", "--json", "--grid", "12", "--restarts", "8"]));
    assert!(f(&s["relation2"]["relation_residual"]) <= 1e-3);
    assert!(f(&s["relation1"]["relation_residual"]) <= 1e-3);
    assert!((f(&s["capacities"]["e_max_prod"]) - 0.6009).abs() < 1e-4);
}

#[test]
fn table_output_uses_twelve_significant_digits() {
    let out = ucap(&["capacities", "--d", "0.39269908169872414,0,0", "--grid", "8", "--restarts", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.707106781187"), "{text}");
}
