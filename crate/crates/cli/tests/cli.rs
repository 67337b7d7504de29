//! End-to-end runs of the `syzygy` binary.

use std::path::Path;
use std::process::{Command, Output};

fn syzygy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syzygy")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn circular_lagrange_in_double_double_has_no_eclipses() {
    let dir = tempfile::tempdir().unwrap();
    let out = syzygy(&[
        "eclipses", "--ic", "lagrange-circular", "--masses", "1,2,3", "--precision", "double-double",
        "--tmax", "25", "--out", path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).trim(), "(none)");
    let seq: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sequence.json")).unwrap()).unwrap();
    assert_eq!(seq["count"], 0, "{seq}");
}

#[test]
fn eight_loop_file_gives_three_periods_of_123() {
    let dir = tempfile::tempdir().unwrap();
    let found = syzygy(&["find-eight", "--out", path(&dir.path().join("eight"))]);
    assert_eq!(found.status.code(), Some(0), "{}", String::from_utf8_lossy(&found.stderr));
    let loop_file = dir.path().join("eight/loop.json");
    let loop_: serde_json::Value = serde_json::from_slice(&std::fs::read(&loop_file).unwrap()).unwrap();
    let tmax = 3.0 * loop_["period"].as_f64().unwrap();
    let out = syzygy(&[
        "eclipses", "--loop", path(&loop_file), "--tmax", &tmax.to_string(), "--out", path(&dir.path().join("seq")),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).trim(), "123123 x3");

    let verify = syzygy(&[
        "verify-theorem2", "--loop", path(&loop_file), "--tmax", &tmax.to_string(), "--grid", "30",
        "--out", path(&dir.path().join("verify")),
    ]);
    assert_eq!(verify.status.code(), Some(0), "{}", stdout(&verify));
    let residual: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("verify/residual.json")).unwrap()).unwrap();
    assert_eq!(residual["tolerance_pass"], true);
    for key in ["max_residual", "argmax_t", "h_used"] {
        assert!(residual[key].is_number(), "{key} missing");
    }
}

#[test]
fn seeded_random_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = syzygy(&["simulate", "--ic", "random", "--seed", "7", "--tmax", "10", "--out", path(&out)]);
        assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["trajectory.csv", "events.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"masses": [1, 1, 1], "tmaxx": 3}"#).unwrap();
    let out = syzygy(&["simulate", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tmaxx"));
}

#[test]
fn homothetic_collapse_exits_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = syzygy(&["simulate", "--ic", "lagrange-homothety", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["termination"].to_string().contains("triple"), "{summary}");
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn cone_and_conformal_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cone = syzygy(&["cone-check", "--samples", "5000", "--out", path(dir.path())]);
    assert_eq!(cone.status.code(), Some(0), "{}", stdout(&cone));
    assert!(stdout(&cone).contains("576"));
    let conf = syzygy(&["conformal-check", "--masses", "1,2,3", "--samples", "20", "--out", path(dir.path())]);
    assert_eq!(conf.status.code(), Some(0), "{}", stdout(&conf));
}

#[test]
fn scan_writes_header_and_positive_minima() {
    let dir = tempfile::tempdir().unwrap();
    let out = syzygy(&["scan-inequalities", "--masses", "1,2,3", "--grid", "40", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "phi,theta,lambda,dUdphi,dloglambda_dphi,ineq1,ineq2,q_kinetic_factor,q_potential_term"
    );
    assert_eq!(csv.lines().count(), 1 + 40 * 40);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("scan_summary.json")).unwrap()).unwrap();
    assert!(summary["min_ineq1"]["value"].as_f64().unwrap() > 0.0);
}
