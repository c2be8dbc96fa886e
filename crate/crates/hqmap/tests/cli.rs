use std::process::{Command, Output};

use serde_json::Value;

fn hqmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hqmap")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn classify_catalog_fixed_point() {
    let v = json(&hqmap(&["classify", "--family", "2", "--s", "0.7", "--eps", "-1"]));
    assert_eq!(v["family"], 2);
    assert_eq!(v["s"], 0.7);
    assert!(v["certificate"].as_f64().unwrap() < 1e-8);
}

#[test]
fn rank_is_sixteen() {
    let v = json(&hqmap(&["rank", "--family", "3", "--eps", "1", "--s0", "0.5"]));
    assert_eq!(v["rank"], 16);
    assert_eq!(v["singular_values"].as_array().unwrap().len(), 16);
}

#[test]
fn exit_codes() {
    assert_eq!(hqmap(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hqmap(&["classify", "--family", "2", "--eps", "3"]).status.code(), Some(2));
    assert_eq!(hqmap(&["classify", "--sphere-index", "7", "--eps", "-1"]).status.code(), Some(1));
    assert_eq!(hqmap(&["classify", "--map", "/nonexistent/map.json"]).status.code(), Some(2));
}

#[test]
fn emitted_map_classifies_from_file() {
    let out = hqmap(&["catalog", "emit", "--family", "3", "--s", "1.3", "--eps", "-1"]);
    assert!(out.status.success());
    let path = std::env::temp_dir().join(format!("hqmap-emit-{}.json", std::process::id()));
    std::fs::write(&path, &out.stdout).unwrap();
    let v = json(&hqmap(&["classify", "--map", path.to_str().unwrap(), "--eps", "-1"]));
    std::fs::remove_file(&path).ok();
    assert_eq!(v["family"], 3);
    assert!((v["s"].as_f64().unwrap() - 1.3).abs() < 1e-6);
}

#[test]
fn sweep_csv_is_deterministic() {
    let args = ["sweep", "--base-family", "2", "--eps", "1", "--grid-spec", "radii=3,angles=2,max=0.3", "--format", "csv"];
    let a = hqmap(&args);
    let b = hqmap(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "p_re,p_im,p_u,family,s,certificate,flags");
    assert_eq!(text.lines().count(), 1 + 1 + 6);
}

#[test]
fn config_file_sets_signature() {
    let path = std::env::temp_dir().join(format!("hqmap-cfg-{}.toml", std::process::id()));
    std::fs::write(&path, "eps = -1\n").unwrap();
    let v = json(&hqmap(&["classify", "--config", path.to_str().unwrap(), "--family", "1"]));
    assert_eq!(v["eps"], -1);
    let v = json(&hqmap(&["classify", "--config", path.to_str().unwrap(), "--eps", "1", "--family", "1"]));
    assert_eq!(v["eps"], 1);
    std::fs::remove_file(&path).ok();
}
