use std::path::Path;
use std::process::{Command, Output};

fn grazing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grazing")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn theta_emits_one_csv_row() {
    let o = grazing(&["theta", "--s", "1", "--rho", "0.5", "--kappa", "0.01"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config_sha256="));
    assert_eq!(lines[1], "rho,kappa,theta,r_min,error");
    let row: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row.len(), 5);
    assert!(row[2] > 0.0 && row[2] < 0.1);
}

#[test]
fn cphi_reports_agreement() {
    let o = grazing(&["cphi", "--s", "0.5"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["agree"], serde_json::Value::Bool(true));
    assert!(v["relative_difference"].as_f64().unwrap() < 1e-4);
}

#[test]
fn moments_and_apply_emit_json() {
    let o = grazing(&["moments", "--s", "0.5", "--kappa", "0.01"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["sin2_moment"].as_f64().unwrap() > 0.0);
    let o = grazing(&["apply", "--op", "landau", "--psi", "energy", "--v1", "0.5,0,0", "--s", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["value"].as_f64().unwrap().abs() <= 10.0 * v["error_estimate"].as_f64().unwrap());
    assert!(v["breakdown"]["near_field"].is_number());
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(grazing(&["theta", "--s", "-1", "--rho", "0.5", "--kappa", "0.01"]).status.code(), Some(2));
    let o = grazing(&["apply", "--op", "noncutoff", "--psi", "gaussian", "--v1", "0,0,0", "--s", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("s > 1"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"s":1,"f":{"kind":"poly_bump","f0":1,"q":2},"typo":1}"#).unwrap();
    let o = grazing(&["study", "--kind", "coulomb-log", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("typo"));
    let o = grazing(&["study", "--kind", "coulomb-log", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));
}

fn run_study(kind: &str, config: &str, dir: &Path, threads_env: bool) -> Output {
    let cfg = dir.join(format!("{kind}.config.json"));
    std::fs::write(&cfg, config).unwrap();
    let mut c = Command::new(env!("CARGO_BIN_EXE_grazing"));
    if threads_env {
        c.env("GRAZING_THREADS", "1");
    }
    c.args(["study", "--kind", kind, "--config"]).arg(&cfg).arg("--out-dir").arg(dir).output().unwrap()
}

#[test]
fn grazing_study_on_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_study("grazing", r#"{"s":0.5,"f":{"kind":"poly_bump","f0":1,"q":2}}"#, dir.path(), false);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("study grazing: PASS"));
    let csv = std::fs::read_to_string(dir.path().join("grazing.csv")).unwrap();
    assert!(csv.starts_with("# config_sha256="));
    assert_eq!(csv.lines().count(), 2 + 15);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("grazing.json")).unwrap()).unwrap();
    assert_eq!(json["report"]["pass"], serde_json::Value::Bool(true));
    assert_eq!(json["config"]["quad"]["sphere_nodes"], 6);
    assert!(csv.contains(json["config_sha256"].as_str().unwrap()));
}

#[test]
fn report_reruns_from_its_own_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_study("coulomb-log", r#"{"s":1,"f":{"kind":"poly_bump","f0":1,"q":2}}"#, dir.path(), true);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(dir.path().join("coulomb-log.json")).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let second_dir = tempfile::tempdir().unwrap();
    let o = run_study("coulomb-log", &json["config"].to_string(), second_dir.path(), true);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(second_dir.path().join("coulomb-log.json")).unwrap(), first);
    let v: Vec<f64> = json["report"]["records"].as_array().unwrap().iter().map(|r| r["value"].as_f64().unwrap()).collect();
    assert_eq!(v.len(), 5);
    let cand = &json["report"]["candidates"];
    assert_eq!(cand["squared"].as_f64(), Some(1.0));
}
