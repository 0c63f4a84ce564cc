use std::process::{Command, Output};

use serde_json::Value;

fn wagner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wagner")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn analyze_disc_at_named_point() {
    let out = wagner(&[
        "analyze", "disc", "--at", "x=0,y=0,varphi=0,psi=0,theta=pi/3", "--param", "A=1", "--param", "C=2", "--param",
        "R=1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["degree"], 2);
    assert_eq!(doc["flag"]["dims"], serde_json::json!([3, 4, 5]));
    // K^1_{133} = C²/(4A(R²+C)) = 1/3, stored as [a][b][c][d]
    let w = doc["blocks"]["wagner"]["values"][0][2][2][0].as_f64().unwrap();
    assert!((w - 1.0 / 3.0).abs() < 1e-12, "{w}");
    assert!(doc.get("seed").is_none());
}

#[test]
fn analyze_ball_has_degree_one() {
    let out = wagner(&["analyze", "ball-sphere", "--param", "k=1", "--seed", "3"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["degree"], 1);
    assert_eq!(doc["seed"], 3);
}

#[test]
fn analyze_heisenberg_matches_reference() {
    let out = wagner(&["analyze", "heisenberg", "--at", "x=0.3,y=-0.7,z=0.2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["degree"], 1);
    let checks = doc["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "K0^2_121"));
    assert!(checks.iter().all(|c| c["pass"] == true));
    assert!(checks.iter().all(|c| c["provenance"] == "oracle" || c["provenance"] == "property"));
}

#[test]
fn report_round_trips_byte_identical() {
    let out = wagner(&["analyze", "disc", "--seed", "11"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", text);
}

#[test]
fn seeded_runs_reproduce() {
    let a = wagner(&["analyze", "ball-sphere", "--seed", "5"]);
    let b = wagner(&["analyze", "ball-sphere", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let c = wagner(&["analyze", "ball-sphere", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn verify_heisenberg_passes() {
    let out = wagner(&["verify", "heisenberg", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["draws"].as_array().unwrap().len(), 5);
    assert_eq!(doc["draws"][0]["points"].as_array().unwrap().len(), 20);
}

#[test]
fn verify_ball_flags_inconsistent_entries() {
    let out = wagner(&["verify", "ball-sphere"]);
    let doc = stdout_json(&out);
    let check = |name: &str| {
        doc["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).cloned().unwrap()
    };
    assert_eq!(check("g_11")["status"], "pass");
    assert_eq!(check("K0^1_121")["status"], "pass");
    assert_eq!(check("g^44")["status"], "pass");
    assert_eq!(check("K0^2_132")["status"], "flagged");
    assert_eq!(check("g^55")["status"], "flagged");
    assert!(check("g^55")["note"].is_string());
    // the published Wagner component is off for k ≠ ±1
    assert_eq!(check("W^1_133")["status"], "fail");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn scan_reports_non_flat_disc() {
    let out = wagner(&["scan", "disc", "--param", "R", "--from", "0.5", "--to", "2", "--steps", "4", "--samples", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    let entries = doc["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    assert_eq!(entries[3]["value"], 2.0);
    assert_eq!(doc["all_non_flat"], true);
}

#[test]
fn empty_scan_range_is_usage_error() {
    let out = wagner(&["scan", "ball-sphere", "--param", "k", "--from", "2", "--to", "1", "--steps", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty parameter range"));
    assert!(out.stdout.is_empty());
}

#[test]
fn geodesic_emits_json_lines() {
    let out = wagner(&[
        "geodesic", "disc", "--q0", "0.1,-0.2,0.3,0.5,1.1", "--u0", "0.7,-0.4,0.9", "--t", "1", "--dt", "0.01", "--every",
        "25",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    let last = lines.last().unwrap();
    assert!((last["t"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(last["energy_drift"].as_f64().unwrap() < 1e-8);
    assert!(last["constraint_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn singular_point_exits_three() {
    let out = wagner(&["analyze", "disc", "--at", "x=0,y=0,varphi=0,psi=0,theta=0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(wagner(&["analyze", "no-such-system"]).status.code(), Some(2));
    assert_eq!(wagner(&["analyze", "disc", "--param", "Q=1"]).status.code(), Some(2));
    assert_eq!(wagner(&["analyze", "disc", "--at", "theta"]).status.code(), Some(2));
    assert_eq!(wagner(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn system_file_by_path() {
    let dir = std::env::temp_dir().join(format!("wagner-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("disc.sys");
    std::fs::write(&path, wagner_core_disc()).unwrap();
    let out = wagner(&["analyze", path.to_str().unwrap(), "--seed", "1"]);
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["degree"], 2);
}

fn wagner_core_disc() -> &'static str {
    include_str!("../../core/systems/disc.sys")
}
