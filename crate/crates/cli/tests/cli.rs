use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn opexp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opexp")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn spec(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const BURGERS: &str = "param nu = 1/10;\neq: dt(u) = nu*D(u;x,x) - u*D(u;x);\ninit: u = sin(x);\n";

#[test]
fn expand_emits_n_plus_one_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "burgers.pde", BURGERS);
    let o = opexp(&["expand", "--spec", &path, "--order", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("series.json"));
    assert_eq!(v["series"][0]["coefficients"].as_array().unwrap().len(), 5);
    assert_eq!(v["config"]["order"], 4);
    let table = std::fs::read_to_string(dir.path().join("series.txt")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn heat_sixth_coefficient_structure() {
    let dir = tempfile::tempdir().unwrap();
    let o = opexp(&["expand", "--case", "heat", "--order", "6"], dir.path());
    assert!(o.status.success());
    let v = json(&dir.path().join("series.json"));
    let sym = v["series"][0]["symbolic"][6].as_str().unwrap();
    let twelve = ["x"; 12].join(",");
    assert_eq!(sym, format!("nu^6*D(u;{twelve})"));
    assert_eq!(v["series"][0]["coefficients"][6], "nu^6*sin(x)");
}

#[test]
fn invalid_spec_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "bad.pde", "eq: dt(u) = = u;\n");
    let o = opexp(&["expand", "--spec", &path], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 1"), "{err}");
    let missing = opexp(&["expand", "--spec", "/nonexistent/x.pde"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    let unknown = opexp(&["verify", "--case", "nope"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
    let flags = opexp(&["verify", "--case", "heat", "--tol", "-1"], dir.path());
    assert_eq!(flags.status.code(), Some(2));
    let both = opexp(&["verify", "--case", "heat", "--suite", "golden"], dir.path());
    assert_eq!(both.status.code(), Some(2));
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sum_matches_taylor_sum_on_the_plateau() {
    let dir = tempfile::tempdir().unwrap();
    let o = opexp(&["sum", "--case", "heat", "--order", "6"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let report = json(&dir.path().join("sum.json"));
    let plateau = report["unknowns"][0]["plateau"].as_f64().unwrap();
    let moll = csv_rows(&dir.path().join("mollified_u.csv"));
    let tay = csv_rows(&dir.path().join("taylor_u.csv"));
    assert_eq!(moll.len(), tay.len());
    let mut inside = 0;
    for (m, t) in moll.iter().zip(&tay) {
        let time: f64 = m[0].parse().unwrap();
        if time <= plateau {
            assert_eq!(m, t);
            inside += 1;
        }
    }
    assert!(inside > 0 && inside < moll.len());
}

#[test]
fn radii_of_a_flat_series() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "flat.pde", "eq: dt(u) = 0;\ninit: u = 1;\n");
    let o = opexp(&["sum", "--spec", &path, "--order", "5"], dir.path());
    assert!(o.status.success());
    let v = json(&dir.path().join("sum.json"));
    let mut fact = 1.0;
    for (n, row) in v["unknowns"][0]["radii"].as_array().unwrap().iter().enumerate().skip(1) {
        fact *= n as f64;
        assert_eq!(row["beta"], 0.0);
        assert_eq!(row["radius"].as_f64().unwrap(), 1.0 / fact);
    }
}

#[test]
fn burgers_tail_report_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "burgers.pde", BURGERS);
    let o = opexp(&["sum", "--spec", &path, "--order", "8", "--omega", "0,6.283185307179586"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("sum.json"));
    assert_eq!(v["pass"], true);
    assert_eq!(v["unknowns"][0]["tail"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_transport_flags_canonical_equality() {
    let dir = tempfile::tempdir().unwrap();
    let o = opexp(&["verify", "--case", "transport"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("report.json"));
    let exact = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "exact/transport/u").unwrap();
    assert_eq!(exact["status"], "PASS");
    assert!(exact["detail"]["coefficients"].as_array().unwrap().iter().all(|r| r["canonical"] == true));
    assert_eq!(v["config"]["source"]["case"]["name"], "transport");
    let timings = json(&dir.path().join("timings.json"));
    assert_eq!(timings.as_array().unwrap().len(), v["checks"].as_array().unwrap().len());
}

#[test]
fn verify_burgers_high_order_never_fails_on_swell() {
    let dir = tempfile::tempdir().unwrap();
    let o = opexp(&["verify", "--case", "burgers", "--order", "12"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("report.json"));
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["status"] != "FAIL"));
}

#[test]
fn verify_exit_code_follows_failures() {
    let dir = tempfile::tempdir().unwrap();
    // a tolerance no finite-difference oracle can meet
    let o = opexp(&["verify", "--case", "burgers", "--tol", "1e-300"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let v = json(&dir.path().join("report.json"));
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["status"] == "FAIL"));
}

#[test]
fn verify_user_spec() {
    let dir = tempfile::tempdir().unwrap();
    let path = spec(dir.path(), "burgers.pde", BURGERS);
    let o = opexp(&["verify", "--spec", &path], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("report.json"));
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"reference-fd/burgers/u"));
    assert!(names.contains(&"equivalence/burgers/consistency"));
}

#[test]
fn ns_taylor_green_and_euler() {
    let dir = tempfile::tempdir().unwrap();
    let o = opexp(&["ns", "--init", "taylor-green-2d", "--grid", "64", "--nu", "0.1", "--order", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["coefficients"].as_array().unwrap().len(), 5);
    assert!(dir.path().join("a4.bin").exists());
    let field = opexp::nonlocal::io::read_binary(&dir.path().join("a1.bin")).unwrap();
    assert_eq!(field.grid().dims(), &[64, 64]);
    let r = json(&dir.path().join("report.json"));
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["name"] == "ns/decay/a4"));

    let euler = tempfile::tempdir().unwrap();
    let o = opexp(&["ns", "--init", "taylor-green-2d", "--nu", "0", "--order", "3"], euler.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn ns_random_field_against_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = opexp(
        &["ns", "--init", "random-band-limited", "--grid", "16,16,16", "--nu", "0.05", "--seed", "42", "--order", "2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&dir.path().join("report.json"));
    let a1 = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "ns/reference-fd/a1").unwrap();
    assert!(a1["error"].as_f64().unwrap() <= 1e-5);
    let bad = opexp(&["ns", "--init", "vortex"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
    let grid = opexp(&["ns", "--grid", "48"], dir.path());
    assert_eq!(grid.status.code(), Some(2));
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        let o = opexp(&["verify", "--case", "wave", "--seed", "3"], dir.path());
        assert!(o.status.success());
        std::fs::read(dir.path().join("report.json")).unwrap()
    };
    assert_eq!(run(), run());
}
