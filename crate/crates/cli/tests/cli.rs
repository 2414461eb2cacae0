use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use plasmodicke_cli::output::{verify, Manifest};
use serde_json::{json, Value};

fn plasmodicke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plasmodicke")).args(args).output().expect("binary runs")
}

fn write_scenario(dir: &Path, v: &Value) -> String {
    let path = dir.join("scenario.json");
    fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn pair(tasks: Value) -> Value {
    json!({
        "name": "pair",
        "tasks": tasks,
        "sphere": {"radius_nm": 15.0},
        "emitters": {"layout": "pair", "h_nm": 20.0, "orientation": "radial", "omega0_eV": 2.771},
        "evolve": {"t_max": 2.0, "samples": 41}
    })
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap_or_else(|| panic!("column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), &pair(json!(["rates", "evolve", "eigenstates"])));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = plasmodicke(&["run", &cfg, "--out", dir.to_str().unwrap(), "--threads", threads]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert!(!ma.files.is_empty());
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.summary, mb.summary);
}

#[test]
fn manifest_digests_match_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = plasmodicke(&["run", "table4", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert!(verify(&out_dir, &m).unwrap().is_empty());
    for f in &m.files {
        assert!(out_dir.join(&f.path).exists(), "{}", f.path);
    }
    fs::write(out_dir.join(&m.files[0].path), "tampered").unwrap();
    assert_eq!(verify(&out_dir, &m).unwrap(), vec![m.files[0].path.clone()]);
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = pair(json!(["rates"]));
    v["sphere"].as_object_mut().unwrap().remove("radius_nm");
    let cfg = write_scenario(tmp.path(), &v);
    let out = plasmodicke(&["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sphere.radius_nm"));

    let out = plasmodicke(&["run", "no-such-preset"]);
    assert_eq!(out.status.code(), Some(2));

    let mut v = pair(json!(["rates"]));
    v["emitters"]["colour"] = json!("red");
    let cfg = write_scenario(tmp.path(), &v);
    let out = plasmodicke(&["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_point_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), &pair(json!(["rates", "evolve"])));
    let run_dir = tmp.path().join("run");
    let sweep_dir = tmp.path().join("sweep");
    assert!(plasmodicke(&["run", &cfg, "--out", run_dir.to_str().unwrap()]).status.success());
    let out = plasmodicke(&[
        "sweep", &cfg, "--param", "emitters.h_nm", "--from", "20", "--to", "20", "--steps", "1", "--out",
        sweep_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = manifest(&run_dir).summary;
    let csv = fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    for key in ["gamma12_over_gamma1", "gamma1_over_gamma0", "peak_w_over_gamma1", "eta_at_peak"] {
        let swept = column(&csv, key);
        assert_eq!(swept.len(), 1);
        let expect = run[key];
        assert!((swept[0] - expect).abs() <= 1e-9 * expect.abs().max(1.0), "{key}: {} vs {expect}", swept[0]);
    }
}

#[test]
fn single_emitter_curves_coincide() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json!({
        "name": "single", "tasks": ["rates", "evolve"], "sphere": {"radius_nm": 15.0},
        "emitters": {"layout": "ring", "count": 1, "h_nm": 20.0, "orientation": "radial", "omega0_eV": 2.77}
    });
    let cfg = write_scenario(tmp.path(), &v);
    let dir = tmp.path().join("o");
    assert!(plasmodicke(&["run", &cfg, "--out", dir.to_str().unwrap()]).status.success());
    let read = |f: &str| column(&fs::read_to_string(dir.join(f)).unwrap(), "W_over_gamma1");
    let (computed, ideal, incoherent) = (read("w_computed.csv"), read("w_ideal.csv"), read("w_incoherent.csv"));
    let t = column(&fs::read_to_string(dir.join("w_computed.csv")).unwrap(), "t_over_tau1");
    for i in 0..computed.len() {
        let exact = (-t[i]).exp();
        assert!((computed[i] - exact).abs() < 1e-8, "t = {}", t[i]);
        assert!((ideal[i] - exact).abs() < 1e-8, "t = {}", t[i]);
        assert!((incoherent[i] - exact).abs() < 1e-8, "t = {}", t[i]);
    }
}

#[test]
fn fig4a_series_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    let out = plasmodicke(&["run", "fig4a", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let (h, theta, g12) =
        (column(&csv, "emitters.h_nm"), column(&csv, "emitters.theta_deg"), column(&csv, "gamma12_over_gamma1"));
    assert_eq!(h.len(), 74);
    for i in 0..h.len() {
        assert!(g12[i].abs() <= 1.0 + 1e-9, "row {i}");
        if theta[i] == 0.0 {
            assert!((g12[i] - 1.0).abs() < 1e-6, "row {i}");
        }
    }
    let at_180 = |hh: f64| g12[(0..h.len()).find(|&i| h[i] == hh && theta[i] == 180.0).unwrap()];
    assert!(at_180(20.0) < -0.85);
    assert!(at_180(2.0).abs() < 0.02);
}

#[test]
fn presets_listing() {
    let out = plasmodicke(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["fig2a-r15", "fig2a-r30", "fig4a-r15", "table4-r30"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn zero_threads_is_a_config_error() {
    let out = plasmodicke(&["--threads", "0", "presets"]);
    assert_eq!(out.status.code(), Some(2));
}
