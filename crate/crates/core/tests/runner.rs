use std::fs;
use std::path::PathBuf;

use mfbs::format::Table;
use mfbs::manifest::Manifest;
use mfbs::runner::{run, run_file, RunOptions};

fn manifests_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../manifests")
}

fn opts(dir: &tempfile::TempDir) -> RunOptions {
    RunOptions { out: Some(dir.path().to_path_buf()), ..Default::default() }
}

#[test]
fn bundled_manifests_validate() {
    let mut n = 0;
    for e in fs::read_dir(manifests_dir()).unwrap() {
        let p = e.unwrap().path();
        let m = Manifest::parse(&fs::read_to_string(&p).unwrap()).unwrap();
        m.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert_eq!(n, 9);
}

#[test]
fn lnd_manifest_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_file(&manifests_dir().join("lnd.toml"), &opts(&dir)).unwrap();
    assert!(s.files.iter().any(|f| f.ends_with("lnd_summary.csv")));
    let t = Table::read(&dir.path().join("lnd_summary.csv")).unwrap();
    let c = t.column("r_min").unwrap();
    assert!(t.rows.iter().all(|r| r[c].parse::<f64>().unwrap() > 0.0));
    for name in ["manifest.toml", "manifest.effective.toml", "version.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn validation_failures_exit_two_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = RunOptions { out: Some(out.clone()), ..Default::default() };
    let err = run("experiment = \"simulate\"\nresolution = [4]\n[interval]\nlo = [1.0]\nhi = [2.0]\n", &o).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn numerical_failures_exit_three_with_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "covariance"
resolution = [3]
[hurst]
family = "constant"
h = [0.3]
[interval]
lo = [1.0]
hi = [2.0]
[params]
process = "x0"
tol = 1e-300
"#;
    let err = run(text, &opts(&dir)).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let body: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("failure.json")).unwrap()).unwrap();
    assert_eq!(body["exit_code"], 3);
    assert!(body["error"].as_str().unwrap().contains("quadrature"));
}

#[test]
fn failed_condition_a_serializes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "validate-hurst"
resolution = [21]
[hurst]
family = "affine-clamped"
intercept = [0.3]
slopes = [[0.2]]
lo = 0.1
hi = 0.9
lipschitz = [0.01]
[interval]
lo = [0.0]
hi = [1.0]
[params]
delta_a = 0.5
"#;
    let err = run(text, &opts(&dir)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let body: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("failure.json")).unwrap()).unwrap();
    assert!(body["certificate"]["axes"][0]["lipschitz_ratio"].as_f64().unwrap() > 0.01);
}

#[test]
fn seed_override_changes_the_fields() {
    let text = fs::read_to_string(manifests_dir().join("simulate.toml")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&text, &opts(&a)).unwrap();
    run(&text, &RunOptions { seed: Some(43), ..opts(&b) }).unwrap();
    let f = |d: &tempfile::TempDir| fs::read(d.path().join("fields/field_0000.bin")).unwrap();
    assert_ne!(f(&a), f(&b));
    assert!(fs::read_to_string(b.path().join("manifest.effective.toml")).unwrap().contains("seed = 43"));
}
