use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn ebm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebm")).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn budyko_d035_has_two_equilibria() {
    let cfg = config("budyko_d035.json");
    let v = json_stdout(&ebm(&["equilibria", "--config", cfg.to_str().unwrap()]));
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 2);
    let stable: Vec<&Value> = list.iter().filter(|e| e["stability"] == "stable").collect();
    assert_eq!(stable.len(), 1);
    assert!((stable[0]["eta"].as_f64().unwrap() - 0.837).abs() < 0.01);
    assert_eq!(stable[0]["coeffs"].as_array().unwrap().len(), 2);

    let with_boundary = json_stdout(&ebm(&["equilibria", "--boundary", "--config", cfg.to_str().unwrap()]));
    assert!(with_boundary
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e["stability"] == "snowball"));
}

#[test]
fn jormungand_has_stable_tropical_ice_line() {
    let cfg = config("jormungand_diff.json");
    let v = json_stdout(&ebm(&["equilibria", "--config", cfg.to_str().unwrap()]));
    let found = v.as_array().unwrap().iter().any(|e| {
        let eta = e["eta"].as_f64().unwrap();
        e["stability"] == "stable" && eta > 0.0 && eta < 0.35
    });
    assert!(found, "{v}");
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"Q\": 343, ").unwrap();
    let out_path = dir.path().join("out.json");
    let out = ebm(&[
        "equilibria",
        "--config",
        bad.to_str().unwrap(),
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out_path.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));
}

#[test]
fn inconsistent_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("jormungand_diff.json")).unwrap();
    let cases = [
        text.replace(", \"rho\": 0.35", ""),
        text.replace("\"D\": 0.25", "\"C\": 3.0"),
        text.replace("\"N\": 1", "\"N\": 1, \"Nmax\": 4"),
        text.replace("\"N\": 1", "\"N\": 0"),
    ];
    for (i, body) in cases.iter().enumerate() {
        assert_ne!(body, &text);
        let path = dir.path().join(format!("c{i}.json"));
        fs::write(&path, body).unwrap();
        let out = ebm(&["equilibria", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "case {i}");
        assert!(out.stdout.is_empty());
    }
    let missing = ebm(&["equilibria", "--config", "/nonexistent/x.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("jormungand_diff.json");
    let mut files = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.csv"));
        let out = ebm(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--eta0",
            "0.4",
            "--t-end",
            "2000",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,eta,T0,T2,Tbar,T_iceline,event");
    assert!(text.contains("cross_equatorward"));
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .take(6)
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((last[1] - 0.246).abs() < 1e-3);
}

#[test]
fn reduced_simulation_slides_for_relaxation_jormungand() {
    let cfg = config("relax_jormungand.json");
    let out = ebm(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--eta0",
        "0.9",
        "--t-end",
        "5000",
        "--reduced",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sliding_onset"));
    let eta: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(eta, 0.35);
}

#[test]
fn sweep_writes_csv_and_summary_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("budyko_d035.json");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let csv = dir.path().join(format!("s{i}.csv"));
        let summary = dir.path().join(format!("s{i}.json"));
        let out = ebm(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--param",
            "D",
            "--min",
            "0.3",
            "--max",
            "0.5",
            "--steps",
            "41",
            "-o",
            csv.to_str().unwrap(),
            "--summary",
            summary.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((fs::read(&csv).unwrap(), fs::read(&summary).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(csv.starts_with("param,eta,stability,T0,branch_id\n"));
    let summary: Value = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(summary["param"], "D");
    assert!(summary["transitions"]
        .as_array()
        .unwrap()
        .iter()
        .any(|t| t["kind"] == "fold"));
}

#[test]
fn sweep_rejects_unknown_parameter() {
    let cfg = config("budyko_d035.json");
    let out = ebm(&[
        "sweep", "--config", cfg.to_str().unwrap(), "--param", "Z", "--min", "0", "--max", "1", "--steps", "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn insolation_and_reduced_poly_json() {
    let v = json_stdout(&ebm(&["insolation-coeffs", "--beta", "23.5", "--max-mode", "5"]));
    let s = v["s"].as_object().unwrap();
    assert_eq!(s.len(), 6);
    assert!((s["2"].as_f64().unwrap() + 0.477).abs() < 3e-3);

    let cfg = config("jormungand_diff.json");
    let v = json_stdout(&ebm(&["reduced-poly", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v["switched"], true);
    assert_eq!(v["h_minus"].as_array().unwrap().len(), 8);

    let cfg = config("relax_budyko_c309.json");
    let v = json_stdout(&ebm(&["reduced-poly", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v["degree"], 3);
}

#[test]
fn validate_passes() {
    let out = ebm(&["validate"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
