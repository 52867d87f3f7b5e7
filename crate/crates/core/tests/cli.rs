use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scissorkin::io::{read_mechanism, read_trajectory_file, write_mechanism};
use scissorkin::model::{build_unit, DesignParams};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scissorkin")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn design_reports_link_table() {
    let o = run(&["design", "--diameter", "25", "--units", "12", "--height", "5.09"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let l1 = v["links"][0]["length_m"].as_f64().unwrap();
    assert!((l1 - 6.645).abs() < 1e-3);
    assert!((v["report"]["stretched_length_m"].as_f64().unwrap() - 6.470).abs() < 1e-3);
}

#[test]
fn design_uses_default_height_per_unit_count() {
    let o = run(&["design", "--diameter", "25", "--units", "18"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["design"]["H_m"].as_f64().unwrap(), 3.436);
    assert!((v["report"]["stretched_length_m"].as_f64().unwrap() - 4.341).abs() < 1e-3);
}

#[test]
fn design_without_diameter_is_a_usage_error() {
    let o = run(&["design", "--units", "12"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_geometry_fails_cleanly() {
    let o = run(&["design", "--diameter", "25", "--units", "2"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("units"));
}

#[test]
fn dof_of_reference_unit_and_four_bar() {
    let o = run(&["dof"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("DoF: 1, loops: 8"), "{}", stdout(&o));
    let o = run(&["dof", "--mechanism", &fixture("four_bar.json")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("DoF: 1"));
}

#[test]
fn malformed_mechanism_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"format\": \"scissorkin-mechanism/1\",\n  \"nodes\": [,]\n}\n").unwrap();
    let o = run(&["dof", "--mechanism", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
}

#[test]
fn simulate_default_run() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let o = run(&["simulate", "-o", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let log = read_trajectory_file(&csv).unwrap();
    assert_eq!(log.samples.len(), 1061);
    assert!((log.samples[0].theta.to_degrees() - 12.54).abs() < 1e-9);
    assert!((log.samples.last().unwrap().theta.to_degrees() - 80.0).abs() < 1e-9);
    assert!((log.samples.last().unwrap().t - 53.0).abs() < 1e-12);
}

#[test]
fn simulate_cycle_sample_count_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&["simulate", "--dt", "0.05", "--cycle", "-o", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let log = read_trajectory_file(&a).unwrap();
    assert_eq!(log.samples.len(), 2041);
}

#[test]
fn simulate_ring_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ring.csv");
    let o = run(&["simulate", "--units", "12", "--dt", "1", "-o", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let log = read_trajectory_file(&csv).unwrap();
    assert_eq!(log.units(), 12);
    assert!(log.node_position("C", 11).is_some());
}

#[test]
fn simulate_reports_mobility_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.json");
    write_mechanism(&scissorkin::model::rigid_triangle().unwrap(), &path).unwrap();
    let o = run(&["simulate", "--mechanism", path.to_str().unwrap(), "--dt", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta"));
}

#[test]
fn validate_reference_unit_passes() {
    let o = run(&["validate"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("velocity vs FD"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn validate_detects_corrupted_length() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unit.json");
    let mut m = build_unit(&DesignParams::reference(12).unwrap()).unwrap();
    m.links[2].length += 0.01;
    write_mechanism(&m, &path).unwrap();
    let o = run(&["validate", "--mechanism", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL  loop closure"));
}

#[test]
fn validate_with_zero_drive_rate() {
    let o = run(&["validate", "--drive-rate", "0"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("loop closure"));
}

#[test]
fn stats_of_simulated_log() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    assert!(run(&["simulate", "--dt", "1", "-o", csv.to_str().unwrap()]).status.success());
    let o = run(&["stats", "-i", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let m = build_unit(&DesignParams::reference(12).unwrap()).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), m.reporting_nodes().len());
    assert_eq!(v["units"]["linear_velocity"], "mm/s");
}

#[test]
fn stats_of_hand_written_log() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("h.csv");
    fs::write(
        &csv,
        "t_s,node,theta_deg,x_m,y_m,z_m,vx,vy,vz,wx,wy,wz,ax,ay,az,ex,ey,ez\n\
         0,P,10,0,0,0,0.001,0,0,0,0,0,0,0,0,0,0,0\n\
         1,P,20,0,0,0,0,0.002,0,0,0,0,0,0,0,0,0,0\n\
         2,P,30,0,0,0,0,0,-0.003,0,0,0,0,0,0,0,0,0\n",
    )
    .unwrap();
    let o = run(&["stats", "-i", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lv = &v["nodes"][0]["linear_velocity"];
    let close = |x: &serde_json::Value, y: f64| (x.as_f64().unwrap() - y).abs() < 1e-12;
    assert!(close(&lv["max"], 3.0) && close(&lv["min"], 1.0) && close(&lv["avg"], 2.0), "{lv}");
}

#[test]
fn stats_rejects_empty_and_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e.csv");
    fs::write(&csv, "").unwrap();
    assert_ne!(run(&["stats", "-i", csv.to_str().unwrap()]).status.code(), Some(0));
    fs::write(&csv, "t_s,node,theta_deg,x_m,y_m,z_m,vx,vy,vz,wx,wy,wz,ax,ay,az,ex,ey,ez\n").unwrap();
    assert_ne!(run(&["stats", "-i", csv.to_str().unwrap()]).status.code(), Some(0));
    assert_ne!(run(&["stats", "-i", "/nonexistent/x.csv"]).status.code(), Some(0));
}

#[test]
fn design_writes_a_round_tripping_mechanism() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unit.json");
    let o = run(&["design", "--diameter", "25", "--mechanism-out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let m = read_mechanism(Path::new(&path)).unwrap();
    assert_eq!(m, build_unit(&DesignParams::reference(12).unwrap()).unwrap());
    let again = dir.path().join("again.json");
    write_mechanism(&m, &again).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn angle_flags_are_degrees() {
    let o = run(&["dof", "--theta", "46.27"]);
    assert!(stdout(&o).contains("theta: 46.2700 deg"));
    let o = run(&["design", "--diameter", "25", "--deployed-angle", "80"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["design"]["theta1_deg"].as_f64().unwrap(), 80.0);
}
