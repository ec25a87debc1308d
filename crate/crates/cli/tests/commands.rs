use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn berrygate(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_berrygate"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn rap_transfers_population_at_reference_settings() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&berrygate(&["rap", "--out", "o"], dir.path()));
    assert!(v["transfer"].as_f64().unwrap() >= 0.999);
    assert!(dir.path().join("o/rap_summary.json").exists());
    let traj = fs::read_to_string(dir.path().join("o/rap_trajectory_0.csv")).unwrap();
    assert!(traj.lines().next().unwrap().starts_with("t_ps,norm,pop_"));
}

#[test]
fn rap_with_zero_area_transfers_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"schema": "berrygate/config/v1", "pulses": {"area_rad": 0}}"#);
    let v = stdout_json(&berrygate(&["rap", "--config", &cfg, "--out", "o"], dir.path()));
    assert!(v["transfer"].as_f64().unwrap().abs() < 1e-15);
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [
        r#"{"schema": "berrygate/config/v1", "pulses": {"chirp": 1}}"#,
        r#"{"schema": "berrygate/config/v1""#,
        r#"{"pulses": {}}"#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = write(dir.path(), &format!("bad{i}.json"), text);
        let out = berrygate(&["gate", "--config", &cfg], dir.path());
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
    }
    let missing = berrygate(&["gate", "--config", "nowhere.json"], dir.path());
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn dry_run_prints_resolved_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"schema": "berrygate/config/v1", "pulses": {"area_pi": 8}}"#);
    let v = stdout_json(&berrygate(&["gate", "--config", &cfg, "--dry-run", "--out", "o"], dir.path()));
    assert!((v["scenario"]["area"].as_f64().unwrap() - 8.0 * PI).abs() < 1e-12);
    assert!(!dir.path().join("o").exists());
}

#[test]
fn gate_variants() {
    let dir = tempfile::tempdir().unwrap();
    let quarter = write(
        dir.path(),
        "q.json",
        r#"{"schema": "berrygate/config/v1", "pulses": {"theta2_rad": 0.7853981633974483}}"#,
    );
    let v = stdout_json(&berrygate(&["gate", "--config", &quarter, "--out", "q", "--decay", "on"], dir.path()));
    assert!(v["lindblad_fidelity"].as_f64().unwrap() >= 0.999);
    assert!((v["rotation_angle_rad"].as_f64().unwrap() - PI / 2.0).abs() < 1e-2);

    let same = write(dir.path(), "s.json", r#"{"schema": "berrygate/config/v1", "pulses": {"theta2_rad": 0}}"#);
    let v = stdout_json(&berrygate(&["gate", "--config", &same, "--out", "s"], dir.path()));
    assert!(v["rotation_angle_rad"].as_f64().unwrap() < 1e-2);
    assert!(v["fidelity"].as_f64().unwrap() > 0.999);

    let stretched = write(dir.path(), "m.json", r#"{"schema": "berrygate/config/v1", "pulses": {"m_f": 2}}"#);
    let v = stdout_json(&berrygate(&["gate", "--config", &stretched, "--out", "m"], dir.path()));
    assert!(v["fidelity"].as_f64().unwrap() > 0.999);
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("m/gate.json")).unwrap()).unwrap();
    assert_eq!(report["outcome"]["operator"].as_array().unwrap().len(), 1);
}

#[test]
fn gate_writes_bloch_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b.json", r#"{"schema": "berrygate/config/v1", "gate": {"bloch": true}}"#);
    stdout_json(&berrygate(&["gate", "--config", &cfg, "--out", "o"], dir.path()));
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("o/gate.json")).unwrap()).unwrap();
    let files = report["bloch"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    assert_eq!(files[0]["ground"], "S12_mJ-1/2_mI+1/2");
    let text = fs::read_to_string(dir.path().join("o/bloch_0.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(rows.iter().all(|r| r[1] * r[1] + r[2] * r[2] + r[3] * r[3] <= 1.0 + 1e-9));
    assert!((rows[0][3] - 1.0).abs() < 1e-9);
    // the path crosses the equator during the first passage
    assert!(rows.iter().any(|r| r[3].abs() < 0.1));
}

#[test]
fn ramsey_recovers_hyperfine_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&berrygate(&["ramsey", "--out", "o"], dir.path()));
    let f = v["f_r_ghz"].as_f64().unwrap();
    let ci = v["f_r_ci95_ghz"].as_f64().unwrap();
    let truth = v["configured_ghz"].as_f64().unwrap();
    assert!((f - truth).abs() <= ci.max(1e-9) + 1e-6 * truth);
    assert!(v["visibility"].as_f64().unwrap() > 0.99);
    assert!(!v["fit"]["alias_ambiguous"].as_bool().unwrap());
    let csv = fs::read_to_string(dir.path().join("o/ramsey.csv")).unwrap();
    assert_eq!(csv.lines().count(), 32);
}

#[test]
fn ramsey_with_one_delay_reports_fit_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.json", r#"{"schema": "berrygate/config/v1", "ramsey": {"delays_ps": [0]}}"#);
    let out = berrygate(&["ramsey", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let fit: Value = serde_json::from_slice(&fs::read(dir.path().join("o/ramsey_fit.json")).unwrap()).unwrap();
    assert_eq!(fit["code"], "fit");
}

#[test]
fn sweep_presets() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&berrygate(&["sweep", "--preset", "figS1d", "--grid", "3", "--out", "s"], dir.path()));
    assert_eq!(v["points"], 12);
    let csv = fs::read_to_string(dir.path().join(v["csv"].as_str().unwrap())).unwrap();
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "detuning_rad_per_ps,phase_offset_rad,value,status");
    assert_eq!(data.len(), 13);
    assert!(csv.contains("# config_hash: "));
    let name = Path::new(v["csv"].as_str().unwrap()).file_name().unwrap().to_string_lossy().to_string();
    assert!(name.starts_with("figS1d_") && name.ends_with(".csv"));

    let out = berrygate(&["sweep", "--preset", "figS9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = berrygate(&["sweep"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_from_config_without_decay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"schema": "berrygate/config/v1",
            "sweep": {"name": "areas", "observable": "fitted_theta",
                      "axes": [{"parameter": "area_rad", "start": 18.85, "stop": 37.7, "points": 3}]}}"#,
    );
    let v = stdout_json(&berrygate(&["sweep", "--config", &cfg, "--decay", "off", "--workers", "1", "--out", "s"], dir.path()));
    let result: Value = serde_json::from_slice(&fs::read(dir.path().join(v["json"].as_str().unwrap())).unwrap()).unwrap();
    assert_eq!(result["decay"], false);
    for x in result["values"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - PI).abs() < 1e-2);
    }
}

#[test]
fn fit_command() {
    let dir = tempfile::tempdir().unwrap();
    let mut fringe = String::from("theta_rad,probability\n");
    for k in 0..25 {
        let t = PI * k as f64 / 24.0;
        fringe += &format!("{t},{}\n", 0.9 * (t + 0.2).sin().powi(2) + 0.05);
    }
    let data = write(dir.path(), "fringe.csv", &fringe);
    let v = stdout_json(&berrygate(&["fit", &data, "--model", "fringe"], dir.path()));
    let est: Vec<f64> = v["estimates"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((est[0] - 0.9).abs() < 1e-8 && (est[1] - 0.2).abs() < 1e-8 && (est[2] - 0.05).abs() < 1e-8);

    let v = stdout_json(&berrygate(&["fit", &data, "--model", "ramsey"], dir.path()));
    assert!(v["alias_ambiguous"].as_bool().unwrap() || !v["converged"].as_bool().unwrap());

    let empty = write(dir.path(), "empty.csv", "theta_rad,probability\n");
    let out = berrygate(&["fit", &empty, "--model", "fringe"], dir.path());
    assert_ne!(out.status.code(), Some(0));

    stdout_json(&berrygate(&["fit", &data, "--model", "fringe", "--out", "f/fit.json"], dir.path()));
    assert!(dir.path().join("f/fit.json").exists());
}
