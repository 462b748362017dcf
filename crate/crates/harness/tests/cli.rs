use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_safedrive"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["frobnicate"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["train", "boat"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["--help"]).output().unwrap().status.code(), Some(0));
}

#[test]
fn malformed_scenario_exits_1_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"schema_version": 1, "model": "linear_pt", "controller": "cdob_pid", "speed": "fast", "duration": 1}"#).unwrap();
    let out = bin().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("speed"), "{err}");
    let out = bin().args(["run", "/nonexistent/scenario.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_artifacts_and_plot_redraws() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("run")
        .arg(scenario("hoclf_lane_change.json"))
        .args(["--duration", "2", "--seed", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 201);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 5);
    assert!(json["code_version"].is_string());
    std::fs::remove_file(dir.path().join("e_y.svg")).unwrap();
    let out = bin().arg("plot").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("e_y.svg").exists());
}

#[test]
fn grid_training_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = bin().args(["train", "grid", "--steps", "3000", "--seed", "4", "--out"]).arg(d.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let la = std::fs::read(a.path().join("training.csv")).unwrap();
    assert_eq!(la, std::fs::read(b.path().join("training.csv")).unwrap());
    assert!(String::from_utf8_lossy(&la).starts_with("episode,steps,total_reward,loss_mean,eps"));
    let out = bin().arg("eval").arg(a.path().join("policy.vqn")).args(["--episodes", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("grid"));
}

#[test]
fn sweep_writes_gain_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["sweep", "gains", "--speeds", "12", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("gains.csv")).unwrap();
    assert!(csv.starts_with("V,kp,ki,kd,admissible"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("kp 0.2"));
}
