use std::path::Path;
use std::process::{Command, Output};

fn qest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qest")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn multiphase_bounds_json() {
    let o = qest(&["bounds", "--model", "multiphase:d=2,N=2", "--weight", "identity"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c = v["points"][0]["c_sld"].as_f64().unwrap();
    assert!((c - 0.728553).abs() < 1e-6, "{c}");
    let h = v["points"][0]["c_holevo"].as_f64().unwrap();
    assert!((h - c).abs() < 1e-6 * c);
}

#[test]
fn imaging_sweep_rows() {
    let o = qest(&["imaging", "--sweep", "separation:0.01:3:60:log"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "lambda.separation").unwrap();
    let q22 = header.iter().position(|h| *h == "q.separation").unwrap();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 60);
    assert!(rows.windows(2).all(|w| w[1][col] > w[0][col]));
    assert!(rows.iter().all(|r| (r[q22] - 0.25).abs() < 1e-6));
    assert!(!text.contains('\r'));
}

#[test]
fn unknown_model_is_a_validation_error() {
    let o = qest(&["bounds", "--model", "no-such-model"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert_eq!(e.trim_end().lines().count(), 1);
    assert!(e.contains("model"), "{e}");
}

#[test]
fn malformed_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"tasks": ["bounds"], "model": "classical-qubit", "weigth": "identity"}"#).unwrap();
    let o = qest(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weigth"));
    std::fs::write(&path, r#"{"tasks": ["bounds"], "model": "multiphase:d=0,N=1"}"#).unwrap();
    assert_eq!(qest(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_failure_names_the_operation() {
    // the pure state at the boundary has a derivative leaving its support
    let o = qest(&["bounds", "--model", "classical-qubit", "--lambda", "1.0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("bounds"));
}

#[test]
fn bad_tolerance_override() {
    let o = qest(&["multiphase", "--tol-override", "bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn config_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.json");
    std::fs::write(
        &cfg,
        r#"{
            "model": "multiphase:d=2,N=1",
            "lambda": [0.3, -0.5],
            "tasks": ["bounds", "simulate", "multiphase"],
            "seed": 11,
            "simulate": {"shots": 2000, "repetitions": 50, "bootstrap": 100},
            "multiphase": {"d": [2, 3], "photons": [1]}
        }"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = qest(&["run", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--threads", "1"]);
    assert!(oa.status.success(), "{}", stderr(&oa));
    let ob = Command::new(env!("CARGO_BIN_EXE_qest"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("QEST_THREADS", "3")
        .output()
        .unwrap();
    assert!(ob.status.success(), "{}", stderr(&ob));
    for f in ["bounds.csv", "simulate.csv", "multiphase.csv", "simulate_summary.json"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&read(&a, "manifest.json")).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["files"].as_array().unwrap().len(), 6);
    let sim = String::from_utf8(read(&a, "simulate.csv")).unwrap();
    assert_eq!(sim.lines().count(), 51);
    assert!(sim.lines().next().unwrap().contains("lambda.phi1"));
}

#[test]
fn sdp_self_check_passes() {
    let o = qest(&["sdp-check", "--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn classify_reports_flags() {
    let o = qest(&["classify", "--model", "classical-qubit", "--points", "0.2;0.4;0.7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for k in ["classical", "quasi_classical", "d_invariant", "asymptotically_classical"] {
        assert_eq!(v[k], serde_json::Value::Bool(true), "{k}");
    }
}
