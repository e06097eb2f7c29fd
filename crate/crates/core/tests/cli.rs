mod common;

use std::path::Path;
use std::process::{Command, Output};

use s1avg::harness::parse_table;

fn s1avg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s1avg")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_and_io_errors_exit_with_one() {
    assert_eq!(code(&s1avg(&[])), 1);
    assert_eq!(code(&s1avg(&["verify"])), 1);
    assert_eq!(code(&s1avg(&["verify", "--config", "/nonexistent.cfg"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let bad = common::write_temp(&dir, "bad.cfg", &common::SMALL.replace("k = 1", "k = 2"));
    let o = s1avg(&["average", "--config", path(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
    assert_eq!(code(&s1avg(&["--version"])), 0);
}

#[test]
fn average_writes_the_reduced_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::write_temp(&dir, "small.cfg", common::SMALL);
    let o = s1avg(&["average", "--config", path(&cfg)]);
    assert_eq!(code(&o), 0);
    let t = parse_table(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(t.header, vec!["tau", "z1"]);
    assert_eq!(t.rows.len(), 101);
    assert_eq!(t.rows[0], vec![0.0, 0.5]);
}

#[test]
fn verify_is_deterministic_and_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::write_temp(&dir, "small.cfg", common::SMALL);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = s1avg(&["verify", "--config", path(&cfg), "--out", path(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("verdict: PASS"));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = s1avg(&[
        "verify", "--config", path(&cfg), "--eps-min", "0.04", "--eps-max", "0.08", "--eps-count", "3", "--timings",
    ]);
    assert_eq!(code(&o), 0);
    let t = parse_table(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let eps: Vec<f64> = t.rows.iter().map(|r| r[0]).collect();
    assert_eq!(eps.len(), 3);
    assert!((eps[0] - 0.04).abs() < 1e-15 && (eps[2] - 0.08).abs() < 1e-15);
    assert!(t.rows.iter().all(|r| r[9] > 0.0));
}

#[test]
fn normal_form_without_signal_fails_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::write_temp(&dir, "zero.cfg", &common::unperturbed());
    let o = s1avg(&["normal-form", "--config", path(&cfg)]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("verdict: FAIL"));

    let cfg = common::write_temp(&dir, "small.cfg", common::SMALL);
    let o = s1avg(&["normal-form", "--config", path(&cfg), "--eps-min", "0.001953125", "--eps-max", "0.125", "--eps-count", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("epsilon,defect,remainder_norm\n"));
}

#[test]
fn bounds_adiabatic_and_gronwall() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::write_temp(&dir, "small.cfg", common::SMALL);
    let o = s1avg(&["bounds", "--config", path(&cfg)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for q in ["kappa0,", "kappa1,", "kappa2,", "c,", "epsilon0,", "L0,"] {
        assert!(text.lines().any(|l| l.starts_with(q)), "{q}");
    }

    let o = s1avg(&["gronwall", "--config", path(&cfg), "--eps", "0.1", "--ns", "4", "--nt", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = parse_table(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(t.header, vec!["t", "length", "gronwall_bound", "mmn_bound"]);
    assert!(t.rows.iter().all(|r| r[1] <= r[2] && r[1] <= r[3]));

    let adi = common::write_temp(&dir, "adi.cfg", common::SMALL_ADIABATIC);
    let o = s1avg(&["adiabatic", "--config", path(&adi)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("epsilon,drift,bound,lambda_j,c,wall_ms\n"));
    assert_eq!(code(&s1avg(&["adiabatic", "--config", path(&cfg)])), 1);
}

#[test]
fn shipped_verify_matches_the_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.csv");
    let cfg = common::shipped("one_frequency");
    let o = s1avg(&["verify", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/one_frequency_verify.csv");
    assert_eq!(std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(golden).unwrap());
}
