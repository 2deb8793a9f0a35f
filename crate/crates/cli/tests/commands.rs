use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn orlicz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz")).args(args).output().expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_in(dir: &Path, command: &str, cfg: &str, out: &str, extra: &[&str]) -> (i32, Output) {
    let out = dir.join(out);
    let mut args = vec![command, cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = orlicz(&args);
    (o.status.code().unwrap(), o)
}

const POISSON: &str = r#"
phi = {family="power", p="2"}

[grid]
extent = [-1.0, 1.0]
n = 201

[options]
normalized = true
load = "1"
"#;

const DOUBLE_PHASE: &str = r#"
seed = 11
phi = {family="double_phase", p="1.5", q="3", mu="x"}

[grid]
n = 41

[options]
pairs = 20000
r = [1.5, 3.0]
ns = [21, 41, 81]
s_count = 21
"#;

#[test]
fn poisson_center_value() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "poisson.toml", POISSON);
    let (code, out) = run_in(dir.path(), "solve", &cfg, "out", &[]);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    let center = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .find(|r| r[0] == 0.0)
        .unwrap();
    assert!((center[1] - 0.5).abs() <= 1e-10, "u(0) = {}", center[1]);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/solve.json")).unwrap()).unwrap();
    assert_eq!(meta["method"], "newton");
    assert!(meta["residual_inf"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn constants_best_constant_bound() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.toml", "phi = {family=\"power\", p=\"1.5\"}\n[options]\nr = [1.5]\npairs = 10000\n");
    let (code, _) = run_in(dir.path(), "constants", &cfg, "out", &[]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/constants.json")).unwrap()).unwrap();
    let row = &report["powerlaw"][0];
    assert_eq!(row["r"], 1.5);
    assert!(row["best_constant"].as_f64().unwrap() >= 0.5);
    assert_eq!(row["report"]["verdict"], "holds");
    let csv = fs::read_to_string(dir.path().join("out/constants.csv")).unwrap();
    assert!(csv.starts_with("r,paper_constant,best_constant,min_ratio\n1.5,0.5,"));
}

#[test]
fn check_on_square_holds() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "p2.toml", "phi = {family=\"power\", p=\"2\"}\n");
    let (code, _) = run_in(dir.path(), "check", &cfg, "out", &[]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/check.json")).unwrap()).unwrap();
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 9);
    assert!(reports.iter().all(|r| r["verdict"] == "holds"));
}

#[test]
fn failing_property_exits_with_two() {
    // p < 2 < q: the second derivative is neither almost increasing nor almost decreasing
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "dp.toml", DOUBLE_PHASE);
    let (code, _) = run_in(dir.path(), "check", &cfg, "out", &[]);
    assert_eq!(code, 2);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/check.json")).unwrap()).unwrap();
    let mono2 = report["reports"].as_array().unwrap().iter().find(|r| r["property"] == "mono2").unwrap();
    assert_eq!(mono2["verdict"], "fails");
    assert!(!mono2["witnesses"].as_array().unwrap().is_empty());
    let mu = report["fields"].as_array().unwrap().iter().find(|f| f["field"] == "mu").unwrap();
    assert_eq!(mu["rigorous"], false);
}

#[test]
fn errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let bad_syntax = config(dir.path(), "a.toml", "phi = {family=\"power\", p=\"2\"\n");
    let (code, out) = run_in(dir.path(), "check", &bad_syntax, "out", &[]);
    assert_eq!(code, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1, column"));

    let bad_exponent = config(dir.path(), "b.toml", "phi = {family=\"power\", p=\"0.5\"}\n");
    assert_eq!(run_in(dir.path(), "check", &bad_exponent, "out", &[]).0, 1);

    let missing = dir.path().join("missing.toml");
    assert_eq!(run_in(dir.path(), "check", missing.to_str().unwrap(), "out", &[]).0, 1);

    let variant_b = config(dir.path(), "c.toml", "phi = {family=\"power\", p=\"2\"}\n[options]\nvariant = \"b\"\n");
    assert_eq!(run_in(dir.path(), "solve", &variant_b, "out", &[]).0, 1);

    let poisson = config(dir.path(), "d.toml", POISSON);
    assert_eq!(run_in(dir.path(), "solve", &poisson, "out", &["--tol", "-1"]).0, 1);
    assert_eq!(run_in(dir.path(), "frobnicate", &poisson, "out", &[]).0, 1);
}

#[test]
fn thread_count_is_validated() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "p2.toml", "phi = {family=\"power\", p=\"2\"}\n[grid]\nn = 5\n");
    let out = Command::new(env!("CARGO_BIN_EXE_orlicz"))
        .args(["conjugate", &cfg, "--out", dir.path().join("o").to_str().unwrap()])
        .env("ORLICZ_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "dp.toml", DOUBLE_PHASE);
    let poisson = config(dir.path(), "p.toml", POISSON);
    let mut produced = Vec::new();
    for (k, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        for command in ["check", "constants", "conjugate", "refine"] {
            Command::new(env!("CARGO_BIN_EXE_orlicz"))
                .args([command, &cfg, "--out", out.to_str().unwrap()])
                .env("ORLICZ_THREADS", threads)
                .output()
                .unwrap();
        }
        Command::new(env!("CARGO_BIN_EXE_orlicz"))
            .args(["solve", &poisson, "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        produced.push(out);
    }
    let names = ["check.json", "constants.json", "constants.csv", "conjugate.csv", "refine.json", "solution.csv", "solve.json"];
    for name in names {
        let a = fs::read(produced[0].join(name)).unwrap();
        let b = fs::read(produced[1].join(name)).unwrap();
        assert!(!a.is_empty() && a == b, "{name} differs");
    }
    let (_, _) = run_in(dir.path(), "constants", &cfg, "reseeded", &["--seed", "12"]);
    let other = fs::read(dir.path().join("reseeded/constants.json")).unwrap();
    assert_ne!(other, fs::read(produced[0].join("constants.json")).unwrap());
}
