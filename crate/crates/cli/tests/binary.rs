use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radon-weights")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn parabola_polytope() {
    let out = run(&["polytope", "--spec", path(&fixture("parabola.spec"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let extremes: Vec<&Value> = v["result"]["extremes"].as_array().unwrap().iter().map(|e| &e["degree"]).collect();
    assert_eq!(extremes, vec![&serde_json::json!([2, 2])]);
    assert_eq!(v["result"]["matches_closed_form"], Value::Bool(true));
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["name"] == "flow_polytope_agrees" && c["passed"] == true));
}

#[test]
fn remark_equivalence_reproduces_failure() {
    let out = run(&["equivalence", path(&fixture("remark.spec"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["verdict"], "non-extreme failure reproduced");
    assert_eq!(v["result"]["s_psi"], "0/1");
    assert_ne!(v["result"]["s_lambda"], "0/1");
}

/// A cheaper copy of a fixture's sweep.
fn reduced(file: &str, dir: &std::path::Path) -> PathBuf {
    let text = std::fs::read_to_string(fixture(file)).unwrap();
    let text = text.replace(
        "deltas = [\"1/8\", \"1/16\", \"1/32\", \"1/64\", \"1/128\", \"1/256\"]",
        "deltas = [\"1/8\", \"1/16\", \"1/32\", \"1/64\"]\nsamples = 30000",
    );
    let p = dir.join(file);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn t4_estimate_writes_csv_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let spec = reduced("t4.spec", dir.path());
    let out_a = dir.path().join("a");
    let out = run(&["estimate", path(&spec), "--out", out_a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out_a.join("estimate.json")).unwrap()).unwrap();
    let flags: Vec<(&str, &str)> = report["result"]["sweeps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["weight"].as_str().unwrap(), s["flag"].as_str().unwrap()))
        .collect();
    assert_eq!(flags, vec![("unweighted", "blowup"), ("rho", "bounded")]);
    let csv = std::fs::read_to_string(out_a.join("estimate.csv")).unwrap();
    assert!(csv.starts_with("weight,delta,mass,measures,ratio,quadrature_change\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 4);

    // same spec and seed, different thread count: identical bytes
    let out_b = dir.path().join("b");
    let out = run(&["estimate", path(&spec), "--out", out_b.to_str().unwrap(), "--jobs", "1"]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["estimate.json", "estimate.csv"] {
        assert_eq!(std::fs::read(out_a.join(f)).unwrap(), std::fs::read(out_b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_override_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = reduced("t4.spec", dir.path());
    let out = run(&["estimate", path(&spec), "--seed", "7"]);
    let v = json(&out);
    assert!(v["spec"].as_str().unwrap().contains("seed = 7"));
    let other = json(&run(&["estimate", path(&spec)]));
    assert_ne!(v["result"], other["result"]);
}

#[test]
fn echoed_spec_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(&["equivalence", path(&fixture("parabola.spec"))]);
    let echo = dir.path().join("echo.spec");
    std::fs::write(&echo, json(&first)["spec"].as_str().unwrap()).unwrap();
    let second = run(&["equivalence", path(&echo)]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn schema_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.spec");
    std::fs::write(&bad, "dimension = 2\nmode = \"fields\"\nk = 1\nsurprise = true\n").unwrap();
    let out = run(&["polytope", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    let paths: Vec<&str> = v["errors"].as_array().unwrap().iter().map(|e| e["path"].as_str().unwrap()).collect();
    assert!(paths.contains(&"surprise") && paths.contains(&"k"), "{paths:?}");

    let out = run(&["invariance", path(&fixture("xray.spec"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["nonsense", path(&fixture("xray.spec"))]).status.code(), Some(2));
    assert_eq!(run(&["polytope", "/nonexistent.spec"]).status.code(), Some(2));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("parabola.spec")).unwrap().replace("expect = \"holds\"", "expect = \"fails\"");
    let p = dir.path().join("wrong.spec");
    std::fs::write(&p, text).unwrap();
    let out = run(&["invariance", path(&p)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["failures"], serde_json::json!(["identity"]));
}

#[test]
fn tolerance_override() {
    let dir = tempfile::tempdir().unwrap();
    let tol = dir.path().join("tol.toml");
    std::fs::write(&tol, "band_factor = 2.5\n").unwrap();
    let v = json(&run(&["weight", path(&fixture("parabola.spec")), "--tolerances", tol.to_str().unwrap()]));
    assert!(v["spec"].as_str().unwrap().contains("band_factor = 2.5"));
    std::fs::write(&tol, "band = 2.5\n").unwrap();
    assert_eq!(run(&["weight", path(&fixture("parabola.spec")), "--tolerances", tol.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn exact_subcommands_pass_on_fixtures() {
    let cases = [
        ("brackets", "xray.spec"),
        ("polytope", "twisted_cubic.spec"),
        ("polytope", "loomis_whitney.spec"),
        ("separate", "remark.spec"),
        ("weight", "twisted_cubic.spec"),
        ("equivalence", "xray.spec"),
        ("invariance", "parabola.spec"),
    ];
    for (cmd, file) in cases {
        let out = run(&[cmd, path(&fixture(file))]);
        assert_eq!(out.status.code(), Some(0), "{cmd} {file}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
