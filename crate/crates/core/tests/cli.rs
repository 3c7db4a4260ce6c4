use std::process::{Command, Output};

use serde_json::Value;

fn pilotlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilotlink")).args(args).output().unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(bytes)))
}

#[test]
fn lists_every_shipped_scenario() {
    let out = pilotlink(&["list-scenarios"]);
    assert!(out.status.success());
    let names: Vec<String> = json(&out.stdout)
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["name"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(names.len(), pilotlink::scenario::CANONICAL.len());
    assert!(names.iter().any(|n| n == "fig10-twinssb"));
}

#[test]
fn validates_canonical_and_file() {
    let out = pilotlink(&["validate", "fig6-dfb-pilot"]);
    assert!(out.status.success());
    assert_eq!(json(&out.stdout)["valid"], true);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "schema_version = 1\nname = \"bad\"\nbaud = -5.0\n").unwrap();
    let out = pilotlink(&["validate", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = json(&out.stderr);
    assert!(err["error"]["kind"].is_string());
    assert!(err["error"]["message"].as_str().unwrap().contains("bad"));
}

#[test]
fn unknown_scenario_is_a_json_error() {
    let out = pilotlink(&["run", "no-such-scenario"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(json(&out.stderr)["error"]["message"].is_string());
}

#[test]
fn short_sweep_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = pilotlink(&[
        "run",
        "fig6-ecl-pilot",
        "--sweep",
        "photocurrent=1.6e-3:1.8e-3:1e-4",
        "--points-bits",
        "100000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out.stdout);
    assert_eq!(report["points"].as_array().unwrap().len(), 3);
    assert_eq!(report["failed_points"], 0);
    for f in report["files"].as_array().unwrap() {
        assert!(std::path::Path::new(f.as_str().unwrap()).is_file());
    }
    let csv = std::fs::read_to_string(dir.path().join("fig6-ecl-pilot.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let manifest = json(&std::fs::read(dir.path().join("fig6-ecl-pilot.manifest.json")).unwrap());
    assert_eq!(manifest["config_hash"], report["config_hash"]);
}
