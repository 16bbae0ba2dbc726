use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_restframe"));
    c.env_remove("RESTFRAME_THREADS");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--quiet").arg("--out").arg(out).output().expect("spawn")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn bundled_scenarios_pass() {
    let cases: &[&[&str]] = &[
        &["kinematics", "boosts.json"],
        &["nbody", "free_two_body.json"],
        &["nbody", "coulomb_two_body.json"],
        &["em", "radiation.json"],
        &["em", "coulomb_charges.json"],
        &["ym", "su2_charges.json"],
        &["gravity", "metric", "york_point.json"],
        &["gravity", "energy", "york_uniform.json"],
        &["gravity", "pn", "pn_binary.json"],
        &["gravity", "pn", "pn_york_shift.json"],
    ];
    for case in cases {
        let dir = tempfile::tempdir().unwrap();
        let (file, cmd) = case.split_last().unwrap();
        let path = scenario(file);
        let mut args: Vec<&str> = cmd.to_vec();
        args.push(path.to_str().unwrap());
        let o = run(&args, dir.path());
        assert_eq!(o.status.code(), Some(0), "{case:?}: {}", String::from_utf8_lossy(&o.stderr));
        let r = report(dir.path());
        assert_eq!(r["pass"], Value::Bool(true), "{case:?}");
        assert!(r.get("wall_clock_s").is_none());
    }
}

#[test]
fn free_two_body_keeps_relative_momentum() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["nbody", scenario("free_two_body.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&dir.path().join("nbody_trajectory.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let pi = [col("pi_x"), col("pi_y"), col("pi_z")];
    assert!(rows.len() > 10);
    for r in &rows {
        for &j in &pi {
            assert_eq!(r[j], rows[0][j]);
        }
    }
    assert!(rows.iter().all(|r| r[col("p_norm")] < 1e-12));
    let (_, wl) = csv_rows(&dir.path().join("nbody_worldlines.csv"));
    assert_eq!(wl.len(), 2 * rows.len());
}

#[test]
fn unknown_subcommand_exits_2() {
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("check"));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"boosts\": [[0.1, 0.2, 0.3]\n  \"jacobi\": []\n}\n").unwrap();
    let o = run(&["kinematics", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("extra.json");
    std::fs::write(&bad, r#"{"boosts": [], "boostz": []}"#).unwrap();
    let o = run(&["kinematics", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("boostz"));
}

#[test]
fn non_neutral_torus_charge_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("charged.json");
    std::fs::write(
        &bad,
        r#"{"grid": {"n": 8, "spacing": 0.5}, "charges": [{"charge": 1.0, "center": [1, 1, 1]}],
            "tau_span": [0, 0.1], "dt": 0.05}"#,
    )
    .unwrap();
    let o = run(&["em", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn collision_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("headon.json");
    std::fs::write(
        &s,
        r#"{"particles": [{"m": 1, "x": [1, 0, 0], "v": [-1, 0, 0]}, {"m": 1, "x": [-1, 0, 0], "v": [1, 0, 0]}],
            "t_span": [0, 5], "dt": 0.001, "collision_radius": 0.05}"#,
    )
    .unwrap();
    let o = run(&["gravity", "pn", s.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failing_invariant_exits_1() {
    // a vanishing tolerance scale turns every nonzero residual into a failure
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--tol-scale", "1e-300", "check", "--module", "kinematics"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(dir.path())["pass"], Value::Bool(false));
}

#[test]
fn invalid_thread_count_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("RESTFRAME_THREADS", "zero")
        .args(["check", "--module", "kinematics", "--quiet", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn timings_flag_adds_wall_clock() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--timings", "kinematics", scenario("boosts.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(report(dir.path())["wall_clock_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn rotation_fit_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["gravity", "fit", scenario("flat_curve.csv").to_str().unwrap(), "--mass", "3", "--knot-count", "6"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["profile"]["values"].as_array().unwrap().len(), 6);
    let (header, rows) = csv_rows(&dir.path().join("fit_curve.csv"));
    assert_eq!(header, ["r", "v_data", "v_model", "residual", "delta"]);
    for r in &rows {
        assert!((r[2] - r[1] - r[3]).abs() < 1e-12);
    }
}

#[test]
fn em_snapshot_has_six_components() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["em", scenario("radiation.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let bytes = std::fs::metadata(dir.path().join("em_snapshot.bin")).unwrap().len();
    assert_eq!(bytes, 6 * 16 * 16 * 16 * 8);
}

#[test]
fn seed_changes_random_fields_but_not_structure() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let path = scenario("su2_charges.json");
    run(&["--seed", "1", "ym", path.to_str().unwrap()], a.path());
    run(&["--seed", "2", "ym", path.to_str().unwrap()], b.path());
    let (h1, r1) = csv_rows(&a.path().join("ym_charges.csv"));
    let (h2, r2) = csv_rows(&b.path().join("ym_charges.csv"));
    assert_eq!(h1, h2);
    assert_eq!(r1.len(), r2.len());
    assert_ne!(r1, r2);
}

#[test]
fn module_reports_list_each_invariant_once() {
    let mut seen = std::collections::BTreeSet::new();
    for module in ["kinematics", "nbody", "ym", "gravity"] {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&["check", "--module", module], dir.path());
        assert_eq!(o.status.code(), Some(0), "{module}");
        let r = report(dir.path());
        let inv = r["invariants"].as_array().unwrap();
        assert!(!inv.is_empty());
        for i in inv {
            assert_eq!(i["suite"], module);
            assert!(seen.insert(i["name"].as_str().unwrap().to_string()), "duplicate {}", i["name"]);
        }
    }
}

#[test]
fn scenario_outputs_are_byte_identical_across_runs() {
    let path = scenario("radiation.json");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(run(&["em", path.to_str().unwrap()], d.path()).status.code(), Some(0));
    }
    for name in ["report.json", "em_series.csv", "em_snapshot.bin"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}
