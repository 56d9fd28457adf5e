mod common;

use std::process::{Command, Output};

use serde_json::Value;

fn hardcore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardcore")).args(args).env("NO_COLOR", "1").output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut a = vec!["--json"];
    a.extend_from_slice(args);
    let out = hardcore(&a);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn model(name: &str) -> String {
    common::model_path(name).to_string_lossy().into_owned()
}

fn temp(name: &str, body: &str) -> String {
    let dir = std::env::temp_dir().join(format!("hardcore-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn constants_are_printed_exactly() {
    let v = json(&["constants", "--model", &model("staircase3")]);
    assert_eq!(v["N"], "479/6");
    assert_eq!(v["rho0"], "479/3355");
    assert_eq!(v["mu"], "1/3");
    assert_eq!(v["R2"], 3);
    let text = serde_json::to_string(&v).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&text).unwrap(), v);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hardcore(&["--bogus"]).status.code(), Some(2));
    assert_eq!(hardcore(&["constants"]).status.code(), Some(2));
    assert_eq!(hardcore(&["--help"]).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_one_with_structured_message() {
    let out = hardcore(&["--json", "constants", "--model", &model("squares2x2")]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["kind"].is_string());
    let missing = hardcore(&["constants", "--model", "/nonexistent/model.json"]);
    assert_eq!(missing.status.code(), Some(1));
    let bad = temp("bad.json", r#"{"name": "x", "lattice": "Z2", "shape": {"polyomino": [[0,0],[5,5]]}}"#);
    assert_eq!(hardcore(&["model", "validate", "--model", &bad]).status.code(), Some(1));
}

#[test]
fn verifier_reports_sliding_family() {
    let v = json(&["verify-assumption", "--model", &model("squares2x2")]);
    assert_eq!(v["passed"], false);
    assert_eq!(v["items"][1]["verdict"], "fail");
}

#[test]
fn audit_is_deterministic_per_seed() {
    let m = model("staircase3");
    let a = hardcore(&["--json", "gfc", "check", "--model", &m, "--trials", "5", "--seed", "3"]);
    let b = hardcore(&["--json", "gfc", "check", "--model", &m, "--trials", "5", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["mismatches"].as_array().unwrap().len(), 0);
}

#[test]
fn sampler_output_is_deterministic_per_seed() {
    let m = model("staircase3");
    let args = ["--json", "mc", "--model", &m, "--box", "8x8", "--z", "2", "--sweeps", "400", "--seed", "5"];
    let a = hardcore(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, hardcore(&args).stdout);
}

#[test]
fn render_writes_well_formed_svg() {
    let cfg = temp("cfg.json", r#"{"particles": [[0,0],[2,1],[-3,2],[1,-3]]}"#);
    let out = std::env::temp_dir().join(format!("hardcore-render-{}.svg", std::process::id()));
    let o = hardcore(&["render", "--model", &model("staircase3"), "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let anchors = doc.descendants().filter(|n| n.attribute("fill") == Some("#000000")).count();
    assert_eq!(anchors, 4);
}

#[test]
fn exact_partition_function_on_a_window() {
    let v = json(&["xi", "--model", &model("staircase3"), "--box", "8x8", "--z", "1,10"]);
    assert_eq!(v["top"], "1");
    assert!(v["values"].as_array().unwrap().len() == 2);
}
