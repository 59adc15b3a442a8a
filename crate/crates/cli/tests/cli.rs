use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("zsforms-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn potential(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_zsforms")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

const ZERO: &str = r#"{"phi1": [], "phi2": []}"#;

#[test]
fn missing_potential_exits_with_io_code() {
    let dir = workdir("missing");
    let out = dir.join("out");
    let (code, err) = run(&["spectrum", dir.join("absent.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn malformed_input_and_config_exit_with_io_code() {
    let dir = workdir("malformed");
    let bad = potential(&dir, "bad.json", "{\"phi1\": 3}");
    let good = potential(&dir, "zero.json", ZERO);
    let out = dir.join("out");
    assert_eq!(run(&["spectrum", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]).0, 3);
    assert_eq!(run(&["spectrum", good.to_str().unwrap(), "--K", "2", "--out", out.to_str().unwrap()]).0, 3);
    assert_eq!(run(&["spectrum", good.to_str().unwrap(), "--K", "8", "--n", "9", "--out", out.to_str().unwrap()]).0, 3);
    assert_eq!(run(&["spectrum", good.to_str().unwrap(), "--ode-tol", "0", "--out", out.to_str().unwrap()]).0, 3);
}

#[test]
fn zero_potential_spectrum() {
    let dir = workdir("spectrum");
    let phi = potential(&dir, "zero.json", ZERO);
    let out = dir.join("out");
    let (code, err) = run(&["spectrum", phi.to_str().unwrap(), "--K", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let doc = read_json(&out.join("spectrum.json"));
    assert_eq!(doc["n0"], 1);
    for row in doc["eigenvalues"].as_array().unwrap() {
        let k = row["k"].as_i64().unwrap() as f64;
        for key in ["minus", "plus"] {
            let (re, im) = complex(&row[key]);
            assert!((re - k * PI).abs() < 1e-9 && im.abs() < 1e-9);
        }
        assert_eq!(row["double"], true);
    }
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 33);
}

#[test]
fn focusing_constant_has_an_open_central_gap() {
    let dir = workdir("focusing");
    let phi = potential(&dir, "foc.json", r#"{"constant": {"a": [1, 0], "b": [-1, 0]}}"#);
    let out = dir.join("out");
    let (code, err) = run(&["spectrum", phi.to_str().unwrap(), "--K", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let doc = read_json(&out.join("spectrum.json"));
    let row = doc["eigenvalues"].as_array().unwrap().iter().find(|r| r["k"] == 0).unwrap().clone();
    assert_eq!(row["double"], false);
    let (re_m, im_m) = complex(&row["minus"]);
    let (re_p, im_p) = complex(&row["plus"]);
    assert!(re_m.abs() < 1e-9 && re_p.abs() < 1e-9);
    assert!((im_m + 1.0).abs() < 1e-9 && (im_p - 1.0).abs() < 1e-9);
}

#[test]
fn zero_potential_differentials_are_kronecker_and_deterministic() {
    let dir = workdir("differentials");
    let phi = potential(&dir, "zero.json", ZERO);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let (code, err) = run(&["differentials", phi.to_str().unwrap(), "--K", "8", "--n=-2,-1,0,1,2", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    for n in -2..=2 {
        let doc = read_json(&a.join(format!("beta_{n}.json")));
        assert!(doc["normalization"]["max_error"].as_f64().unwrap() <= 1e-10);
        for entry in doc["normalization"]["row"].as_array().unwrap() {
            let m = entry[0].as_i64().unwrap();
            let (re, im) = complex(&entry[1]);
            let expect = if m == n { 1.0 } else { 0.0 };
            assert!((re - expect).abs() <= 1e-10 && im.abs() <= 1e-10);
        }
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in names.iter().filter(|n| *n != "run.log") {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name:?} differs");
    }
}

#[test]
fn small_truncation_on_a_rough_potential_fails_to_converge() {
    let dir = workdir("rough");
    let phi = potential(
        &dir,
        "rough.json",
        r#"{"phi1": [[1,1.2,0.3],[-3,0.9,0],[5,0.7,0.2]], "phi2": [[0,1.0,0],[2,-0.8,0.5],[-4,0.6,0]]}"#,
    );
    let out = dir.join("out");
    let (code, err) = run(&["differentials", phi.to_str().unwrap(), "--K", "4", "--n", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("did not converge"), "{err}");
}

#[test]
fn verify_all_on_zero_potential() {
    let dir = workdir("verify");
    let phi = potential(&dir, "zero.json", ZERO);
    let out = dir.join("out");
    let (code, err) = run(&["verify-all", phi.to_str().unwrap(), "--K", "8", "--n=-1,0,2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let summary = read_json(&out.join("summary.json"));
    let stages = summary.as_array().unwrap();
    assert!(stages.iter().all(|s| s["passed"] == true));
    assert!(stages.iter().any(|s| s["stage"] == "omega-hat hypotheses"));
    for file in ["sigma_2.csv", "zeros_0.json", "growth_hat.csv", "growth_-1.csv", "hypotheses.json", "omega_star.json"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let hat = read_json(&out.join("growth_hat.json"));
    assert!((hat["profile"]["fitted_exponent"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}
