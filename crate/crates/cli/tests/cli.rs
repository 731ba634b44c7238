use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_numeraire"));
    cmd.env_remove("NUMERAIRE_OUT_DIR");
    cmd
}

fn tree(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../trees").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn report(out: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join(name)).unwrap()).unwrap()
}

#[test]
fn price_forward_total_is_spot() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["price", "--model", "recip_bessel", "--claim", "euro_forward", "--n", "40000", "--seed", "5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "price.json");
    let p = &r["result"]["price"];
    let total = p["total_dollar"].as_f64().unwrap();
    let se = (p["classical_se"].as_f64().unwrap().powi(2) + p["correction_se"].as_f64().unwrap().powi(2)).sqrt();
    assert!((total - 1.0).abs() < 4.0 * se, "total {total} se {se}");
    assert!(p["correction"].as_f64().unwrap() > 0.25);

    // stdout carries the same report
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, r);
}

#[test]
fn lattice_verify_two_period_passes() {
    let dir = tempfile::tempdir().unwrap();
    let t = tree("two_period.json");
    let o = run(&["lattice-verify", "--tree", t.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "lattice_verify.json");
    assert_eq!(r["passed"], Value::Bool(true));
    assert!(r["result"]["failures"].as_array().unwrap().is_empty());
    assert!(dir.path().join("lattice_parity.csv").exists());
}

#[test]
fn physical_two_period_passes() {
    let dir = tempfile::tempdir().unwrap();
    let t = tree("two_period.json");
    let o = run(&["physical", "--tree", t.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(dir.path(), "physical.json")["result"]["interpretation_holds"], Value::Bool(true));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["price", "--model", "no_such_model"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["price", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["lattice-verify", "--tree", "missing.json"], dir.path()).status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"command": "price", "model": "recip_bessel", "paths": 10}"#).unwrap();
    let o = bin().args(["run", cfg.to_str().unwrap(), "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("paths"));
}

#[test]
fn config_file_runs_parity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"command": "parity", "model": "stopped_bm", "strikes": [0.5, "1"], "mc": {"n": 20000, "seed": 9}}"#,
    )
    .unwrap();
    let o = bin().args(["run", cfg.to_str().unwrap(), "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv::Reader::from_path(dir.path().join("parity.csv")).unwrap().records().count();
    assert_eq!(rows, 2);
}

#[test]
fn csv_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["intl", "--model", "recip_bessel", "--strikes", "0.5,1,2", "--n", "5000", "--seed", "11"];
    run(&args, a.path());
    run(&args, b.path());
    let read = |d: &Path| fs::read_to_string(d.join("intl.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn out_dir_falls_back_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["catalog"]).env("NUMERAIRE_OUT_DIR", dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path(), "catalog.json");
    assert!(r["result"].as_array().unwrap().len() >= 4);
}

#[test]
fn sample_dump_has_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["defect", "--model", "stopped_bm", "--n", "1000", "--dump-samples"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(dir.path().join("samples_euro.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["x_T", "hit_zero_time", "hit_infinity"]);
    assert_eq!(r.records().count(), 1000);
}
