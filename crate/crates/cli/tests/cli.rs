use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsw-lab")).args(args).output().expect("binary runs")
}

fn run_in(dir: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsw-lab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dsw-lab-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn classify_example() {
    let out = run(&["classify", "--left", "4,0.5", "--right", "5.83,0.09"]);
    let v = json(&out);
    assert_eq!(v["case"], "C");
    assert_eq!(v["side"], "same_side");
    for key in ["regions", "edge_speeds", "plateaus", "vacuum_flags"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    assert_eq!(v["edge_speeds"].as_array().unwrap().len(), 4);
    assert_eq!(v["edge_speeds"][0].as_f64().unwrap(), -39.75);
    // byte-identical on repeat
    assert_eq!(out.stdout, run(&["classify", "--left", "4,0.5", "--right", "5.83,0.09"]).stdout);
}

#[test]
fn dispersion_example() {
    let v = json(&run(&["dispersion-test", "--k", "1", "--amp", "0"]));
    assert_eq!(v["omega_analytic"].as_f64().unwrap(), -1.0);
    assert!(v["rel_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn cubic_at_breaking_time() {
    let dir = scratch("cubic");
    let v = json(&run_in(&dir, &["cubic", "--lminus", "0", "--lplus", "1", "--t", "0"]));
    assert_eq!(v["x_left"].as_f64().unwrap(), 0.0);
    assert_eq!(v["x_right"].as_f64().unwrap(), 0.0);
    let csv = std::fs::read_to_string(dir.join("cubic.csv")).unwrap();
    assert!(csv.starts_with("x,l3,l4,rho,envelope_min,envelope_max\n"));
}

#[test]
fn cubic_fan_is_ordered() {
    let dir = scratch("cubic-fan");
    let v = json(&run_in(&dir, &["cubic", "--lminus", "0.25", "--lplus", "1", "--t", "0.3", "--x", "-30:5:71"]));
    let (xl, xr) = (v["x_left"].as_f64().unwrap(), v["x_right"].as_f64().unwrap());
    assert!(xl < xr);
    let csv = std::fs::read_to_string(dir.join("cubic.csv")).unwrap();
    let mut inside = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        if f[0] > xl && f[0] < xr {
            inside += 1;
            assert!(f[1] <= f[2], "l3 > l4 at x = {}", f[0]);
            assert!(f[4] <= f[3] && f[3] <= f[5], "mean density outside the envelope at x = {}", f[0]);
        }
    }
    assert!(inside > 0);
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        &["classify", "--left", "-1,0", "--right", "1,0"][..],
        &["classify", "--left", "1", "--right", "1,0"],
        &["cubic", "--lminus", "2", "--lplus", "1", "--t", "1"],
        &["profile", "--left", "1,0", "--right", "2,0", "--t", "1", "--x", "3:1:5"],
        &["profile", "--left", "1,0", "--right", "2,0", "--t", "0", "--x", "-1:1:5"],
        &["dispersion-test", "--k", "0", "--amp", "1"],
        &["simulate", "--left", "1,0", "--right", "2,0", "--t", "1", "--n", "1000"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn instability_exits_4_with_diagnostics() {
    let dir = scratch("unstable");
    let out = run_in(
        &dir,
        &["simulate", "--left", "1,0", "--right", "2,0", "--t", "5", "--n", "1024", "--length", "200", "--width", "1", "--dt", "0.5"],
    );
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    let diag: Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(diag["kind"], "instability");
}

#[test]
fn profile_is_deterministic_across_thread_counts() {
    let args = ["profile", "--left", "4,0.5", "--right", "5.83,0.09", "--t", "2", "--x", "-100:20:301"];
    let go = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_dsw-lab")).env("DSW_LAB_THREADS", threads).args(args).output().unwrap()
    };
    let (a, b) = (go("1"), go("4"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,rho_upper,nu_upper,rho_lower,nu_lower,envelope_min,envelope_max");
    assert_eq!(lines.count(), 301);
}

#[test]
fn simulate_then_plot() {
    let dir = scratch("simulate");
    let v = json(&run_in(
        &dir,
        &["simulate", "--left", "1,0", "--right", "2,0", "--t", "1", "--n", "1024", "--length", "200", "--width", "1", "--snapshots", "0.5"],
    ));
    assert!(v["mass_relative_drift"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["snapshots"].as_array().unwrap().len(), 2);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("dsw-out/report.json")).unwrap()).unwrap();
    assert_eq!(report, v);
    let out = run_in(&dir, &["plot", "dsw-out/snapshot_001.csv", "--out", "rho.svg", "--y", "rho,nu"]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.join("rho.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn compare_rarefaction_and_plateau() {
    let v = json(&run(&["compare", "--left", "4,0.5", "--right", "5.83,0.09", "--t", "2"]));
    assert!(v["mass_relative_drift"].as_f64().unwrap() < 1e-8);
    let plateaus = v["plateaus"].as_array().unwrap();
    assert_eq!(plateaus.len(), 1);
    assert!(plateaus[0]["rel_error"].as_f64().unwrap() < 1e-3);
    let edges = v["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 4);
    for e in edges.iter().filter(|e| e["kind"] == "rarefaction") {
        assert!(e["rel_error"].as_f64().unwrap() < 1e-2, "{e}");
    }
}
