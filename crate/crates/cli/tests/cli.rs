//! End-to-end tests of the binary: run it on fixture files and check the
//! JSON it prints plus the exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let mut path = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    path.push("tests/data");
    path.push(name);
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmp-surface"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_a1_two_cartier_curves() {
    let report = run_json(&[
        "classify",
        "--model",
        &fixture("a1.json"),
        "--delta",
        r#"{"D1":"1","D2":"1"}"#,
    ]);
    assert_eq!(report["mrlc"], "false");
    assert_eq!(report["gmrlc"], "true");
    assert_eq!(report["gmrlc_witness"], serde_json::json!(["E"]));
    assert_eq!(report["delta_y"]["E"], 2);
}

#[test]
fn classify_smooth_no_boundary_is_klt() {
    let report = run_json(&[
        "classify",
        "--model",
        &fixture("empty-boundary-smooth.json"),
    ]);
    assert_eq!(report["klt"], "true");
    assert_eq!(report["lc"], "true");
    assert_eq!(report["mrlc"], "true");
    assert_eq!(report["gmrlc"], "true");
}

#[test]
fn classify_example33() {
    let report = run_json(&[
        "classify",
        "--model",
        &fixture("example33.json"),
        "--delta",
        r#"{"L1":"1","L2":"1","L3":"1"}"#,
    ]);
    assert_eq!(report["mrlc"], "true");
    assert_eq!(report["lc"], "false");
    assert_eq!(report["delta_y"]["E"], 2);
}

#[test]
fn mmp_on_f1_fan() {
    let trace = run_json(&["mmp", "--fan", &fixture("f1.json")]);
    assert_eq!(trace["steps"].as_array().unwrap().len(), 1);
    assert_eq!(trace["steps"][0]["ray"]["kind"], "birational");
    let outcome = &trace["outcome"]["mori_fiber_space"];
    assert_eq!(outcome["certificate"]["target_dim"], 0);
    assert_eq!(trace["universe_certified_complete"], true);
}

#[test]
fn mmp_trace_streams_ndjson() {
    let out = run(&["mmp", "--fan", &fixture("f1.json"), "--trace"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(lines.len(), 2, "one step line plus the outcome line");
    let step: Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(step["ray"]["kind"], "birational");
    let outcome: Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(outcome["steps"], 1);
}

#[test]
fn pullback_of_cartier_curve() {
    let pulled = run_json(&[
        "pullback",
        "--model",
        &fixture("a1.json"),
        "--divisor",
        r#"{"D1":"1"}"#,
    ]);
    // D1 meets E twice on the resolution: the correction is one full E.
    assert_eq!(pulled["E"], 1);
    assert_eq!(pulled["D1"], 1);
}

#[test]
fn minres_output_reparses_as_model() {
    let minres = run_json(&["minres", "--model", &fixture("example33.json")]);
    // The (-1)-curve over the smooth point is gone.
    assert_eq!(minres["contracted"].as_array().unwrap().len(), 0);
    // Schema round-trip: feed the emitted model back into classify.
    let tmp = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(tmp.path(), serde_json::to_string(&minres).unwrap()).unwrap();
    let report = run_json(&["classify", "--model", &tmp.path().to_string_lossy()]);
    assert_eq!(report["mrlc"], "true");
}

#[test]
fn fundcycle_on_elliptic_cone() {
    let results = run_json(&["fundcycle", "--model", &fixture("elliptic-cone.json")]);
    assert_eq!(results[0]["pa"], 1);
    assert_eq!(results[0]["rational"], false);
    assert_eq!(results[0]["fundamental_cycle"]["E"], 1);
}

#[test]
fn multiplier_floor_example33() {
    let out = run_json(&[
        "multiplier",
        "--model",
        &fixture("example33.json"),
        "--delta",
        r#"{"L1":"1","L2":"1","L3":"1"}"#,
    ]);
    assert_eq!(out["floor_delta_y"]["E"], 2);
    assert_eq!(out["floor_delta_y"]["L1"], 1);
    assert_eq!(out["klt_equiv"], false);
}

#[test]
fn toric_build_round_trips_into_classify() {
    let surface = run_json(&["toric-build", "--fan", &fixture("a1-fan.json")]);
    assert_eq!(surface["universe"].as_array().unwrap().len(), 3);
    let tmp = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(
        tmp.path(),
        serde_json::to_string(&surface["model"]).unwrap(),
    )
    .unwrap();
    let report = run_json(&["classify", "--model", &tmp.path().to_string_lossy()]);
    assert_eq!(report["klt"], "true");
    assert_eq!(report["q_factorial"], "true");
}

#[test]
fn invalid_model_exits_two_with_violations() {
    let out = run(&["classify", "--model", &fixture("bad-adjunction.json")]);
    assert_eq!(out.status.code(), Some(2));
    let value: Value = serde_json::from_slice(&out.stdout).unwrap();
    let violations = value["violations"].as_array().unwrap();
    assert!(!violations.is_empty());
    assert_eq!(violations[0]["rule"], "adjunction_failed");
}

#[test]
fn out_of_range_boundary_exits_three() {
    let out = run(&[
        "classify",
        "--model",
        &fixture("a1.json"),
        "--delta",
        r#"{"D1":"3/2"}"#,
    ]);
    assert_eq!(out.status.code(), Some(3));
    let value: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(value["refusal"]
        .as_str()
        .unwrap()
        .contains("outside [0, 1]"));
}

#[test]
fn mmp_refuses_non_gmrlc_with_exit_three() {
    let out = run(&[
        "mmp",
        "--model",
        &fixture("cone-line.json"),
        "--universe",
        "L",
        "--delta",
        r#"{"L":"1"}"#,
    ]);
    assert_eq!(out.status.code(), Some(3));
    let value: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(value["refusal"]
        .as_str()
        .unwrap()
        .contains("generalized MR log canonical"));
}

#[test]
fn dot_output_written() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("graph.dot");
    let _ = run_json(&[
        "classify",
        "--model",
        &fixture("a1.json"),
        "--dot",
        &dot.to_string_lossy(),
    ]);
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("graph dual {"));
    assert!(text.contains("style=dashed"));
}

#[test]
fn mmp_dot_prefix_writes_step_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("run").to_string_lossy().into_owned();
    let _ = run_json(&["mmp", "--fan", &fixture("f1.json"), "--dot", &prefix]);
    assert!(dir.path().join("run-step-000-before.dot").exists());
    assert!(dir.path().join("run-step-000-after.dot").exists());
}

#[test]
fn max_subset_env_caps_witness_search() {
    let out = Command::new(env!("CARGO_BIN_EXE_mmp-surface"))
        .args([
            "classify",
            "--model",
            &fixture("a1.json"),
            "--delta",
            r#"{"D1":"1","D2":"1"}"#,
        ])
        .env("MMP_SURFACE_MAX_SUBSET", "0")
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    // The cap stops the exhaustive search; the forced set is still tried,
    // and here it already certifies, so the verdict stays decided.
    assert_eq!(report["gmrlc"], "true");

    // A cap of zero with a non-certifying forced set leaves it undecided.
    let out = Command::new(env!("CARGO_BIN_EXE_mmp-surface"))
        .args([
            "classify",
            "--model",
            &fixture("cone-line.json"),
            "--delta",
            r#"{"L":"1"}"#,
        ])
        .env("MMP_SURFACE_MAX_SUBSET", "0")
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["gmrlc"]["undecided"].is_string());
}
