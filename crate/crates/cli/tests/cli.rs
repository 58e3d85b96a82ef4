use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sample-design"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn CLI")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_scalar_instance(dir: &Path) {
    fs::write(
        dir.join("scalar.json"),
        r#"{"n": 3, "k": 2, "p": 1, "psi": [1.0], "fims": [[1.0], [2.0], [3.0]]}"#,
    )
    .unwrap();
}

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (name, seed) in [("a.json", "4"), ("b.json", "4"), ("c.json", "5")] {
        let out = run(d, &["gen", "--n", "12", "--p", "3", "--k", "4", "--seed", seed, "--out", name]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(d.join("a.json")).unwrap();
    assert_eq!(a, fs::read(d.join("b.json")).unwrap());
    assert_ne!(a, fs::read(d.join("c.json")).unwrap());
    let v = json(&d.join("a.json"));
    assert_eq!((v["n"].as_u64(), v["k"].as_u64(), v["p"].as_u64()), (Some(12), Some(4), Some(3)));
    assert_eq!(code(&run(d, &["validate", "--instance", "a.json"])), 0);
}

#[test]
fn gen_rejects_budget_above_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["gen", "--n", "2", "--p", "1", "--k", "5", "--out", "x.json"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget exceeds candidates"));
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn explicit_model_reads_nested_and_flat_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("f.json"), "[[[2, 0], [0, 1]], [1, 0, 0, 3]]").unwrap();
    let out = run(d, &["gen", "--model", "explicit", "--fims", "f.json", "--k", "2", "--psi", "1,2", "--out", "i.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&d.join("i.json"));
    assert_eq!(v["fims"][1], serde_json::json!([1.0, 0.0, 0.0, 3.0]));
    assert_eq!(v["psi"], serde_json::json!([1.0, 2.0]));
}

#[test]
fn validate_flags_indefinite_fim() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), r#"{"n": 2, "k": 1, "p": 1, "psi": [1.0], "fims": [[1.0], [-2.0]]}"#).unwrap();
    let out = run(d, &["validate", "--instance", "bad.json"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fims[1]: FIM not PSD"));
}

#[test]
fn malformed_instance_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), r#"{"n": 2, "k": 1, "p": 1, "psi": [1.0], "fims": [[1.0]]}"#).unwrap();
    let out = run(d, &["solve", "--instance", "bad.json", "--out", "r.json"]);
    assert_eq!(code(&out), 3);
    assert_eq!(code(&run(d, &["solve", "--instance", "missing.json", "--out", "r.json"])), 3);
    assert_eq!(code(&run(d, &["solve", "--bogus"])), 3);
}

#[test]
fn solve_scalar_instance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_scalar_instance(d);
    let out = run(d, &["solve", "--instance", "scalar.json", "--out", "r.json", "--trace", "t.csv"]);
    assert!(matches!(code(&out), 0 | 2));
    let v = json(&d.join("r.json"));
    assert_eq!(v["selected"], serde_json::json!([1, 2]));
    assert!((v["primal_rounded"].as_f64().unwrap() - 0.2).abs() <= 1e-12);
    let trace = fs::read_to_string(d.join("t.csv")).unwrap();
    assert!(trace.starts_with("iter,alpha,dual_value,best_dual,primal_rounded,gap"));
}

#[test]
fn iteration_cap_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_scalar_instance(d);
    let out = run(d, &["solve", "--instance", "scalar.json", "--max-iters", "1", "--out", "r.json", "--trace", "t.csv"]);
    assert_eq!(code(&out), 2);
    let rows = fs::read_to_string(d.join("t.csv")).unwrap().lines().count();
    assert_eq!(rows, 2);
    assert_eq!(json(&d.join("r.json"))["converged"], Value::Bool(false));
}

#[test]
fn oracle_and_compare_agree_on_scalar_instance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_scalar_instance(d);
    assert_eq!(code(&run(d, &["oracle", "--instance", "scalar.json", "--out", "o.json"])), 0);
    let o = json(&d.join("o.json"));
    assert_eq!(o["best_subset"], serde_json::json!([1, 2]));
    assert_eq!(o["evaluated"], serde_json::json!(3));
    let out = run(d, &["compare", "--instance", "scalar.json", "--out", "c.json"]);
    assert_eq!(code(&out), 0);
    let c = json(&d.join("c.json"));
    assert_eq!(c["summary"]["matches"], serde_json::json!(1));
    assert_eq!(c["instances"][0]["weak_duality_holds"], Value::Bool(true));
}

#[test]
fn compare_full_budget_has_zero_excess() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["gen", "--n", "5", "--p", "2", "--k", "5", "--seed", "1", "--out", "i.json"])), 0);
    assert_eq!(code(&run(d, &["compare", "--instance", "i.json", "--out", "c.json"])), 0);
    let c = json(&d.join("c.json"));
    assert_eq!(c["instances"][0]["relative_excess"].as_f64(), Some(0.0));
}

#[test]
fn oracle_cap_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["gen", "--n", "30", "--p", "2", "--k", "10", "--out", "i.json"])), 0);
    assert_eq!(code(&run(d, &["oracle", "--instance", "i.json", "--oracle-cap", "100"])), 3);
}

#[test]
fn batch_compare_reports_every_instance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(d, &["compare", "--batch", "4", "--seed", "2", "--max-iters", "200", "--out", "b.json", "--manifest", "m.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let b = json(&d.join("b.json"));
    assert_eq!(b["instances"].as_array().unwrap().len(), 4);
    assert_eq!(b["summary"]["weak_duality_violations"], serde_json::json!(0));
    let m = json(&d.join("m.json"));
    assert_eq!(m["command"], "compare");
    assert_eq!(m["seed"], serde_json::json!(2));
}
