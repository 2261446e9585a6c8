//! End-to-end runs of the `qnet` binary.

use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn qnet(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_qnet")).args(args).output().unwrap();
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

const SMALL_ENSEMBLE: &str = r#"{
  "families": [
    {"family": "erdos_renyi", "p": 0.2, "n": 20},
    {"family": "barabasi_albert", "l": 2, "n": 20}
  ],
  "couplings": [0.01],
  "realizations": 5,
  "t_end": 8.0,
  "seed": 4
}"#;

#[test]
fn validate_passes_and_writes_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "v.json", r#"{"cases": 8, "max_nodes": 12}"#);
    let out = tmp.path().join("out");
    assert_eq!(qnet(&["validate", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["command"], "validate");
    assert!(read(&out, "validate.csv").lines().count() > 5);
}

#[test]
fn invalid_config_exits_one_without_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    let unknown = write(tmp.path(), "bad.json", r#"{"cases": 3, "bogus": 1}"#);
    assert_eq!(qnet(&["validate", "--config", &unknown, "--out", o]), 1);
    let negative = write(tmp.path(), "neg.json", r#"{"families": [{"family": "erdos_renyi", "p": 1.5, "n": 20}], "couplings": [0.01], "realizations": 2}"#);
    assert_eq!(qnet(&["ensemble", "--config", &negative, "--out", o]), 1);
    assert_eq!(qnet(&["spectral", "--preset", "fig4", "--out", o]), 1);
    assert_eq!(qnet(&["ensemble", "--preset", "fig4", "--config", &negative, "--out", o]), 1);
    assert_eq!(qnet(&["validate", "--threads", "0", "--out", o]), 1);
    assert!(!out.exists());
}

#[test]
fn ensemble_reruns_are_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "e.json", SMALL_ENSEMBLE);
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (d, threads) in dirs.iter().zip(["1", "4", "4"]) {
        let code = qnet(&["ensemble", "--config", &cfg, "--out", d.to_str().unwrap(), "--threads", threads]);
        assert_eq!(code, 0);
    }
    for name in ["summary.csv", "ensemble.csv"] {
        let first = read(&dirs[0], name);
        assert!(first.lines().count() > 1);
        for d in &dirs[1..] {
            assert_eq!(first, read(d, name), "{name}");
        }
    }
    let m = manifest(&dirs[1]);
    assert_eq!(m["threads"], 4);
    assert_eq!(m["master_seed"], 4);
}

#[test]
fn manifest_reproduces_its_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "n.json",
        r#"{"network": {"graph": {"family": "erdos_renyi", "p": 0.3, "n": 20}}, "k": 0.01, "t_end": 6.0}"#,
    );
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    assert_eq!(qnet(&["nonmarkov", "--config", &cfg, "--seed", "12", "--out", first.to_str().unwrap()]), 0);
    let m = first.join("manifest.json");
    assert_eq!(qnet(&["nonmarkov", "--config", m.to_str().unwrap(), "--out", second.to_str().unwrap()]), 0);
    assert_eq!(read(&first, "gip.csv"), read(&second, "gip.csv"));
    assert_eq!(manifest(&second)["master_seed"], 12);
}

#[test]
fn all_failed_family_is_a_runtime_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "f.json",
        r#"{"families": [{"family": "barabasi_albert", "l": 1, "n": 10}], "couplings": [0.01], "realizations": 3, "t_end": 2.0}"#,
    );
    let out = tmp.path().join("out");
    assert_eq!(qnet(&["ensemble", "--config", &cfg, "--out", out.to_str().unwrap()]), 2);
    let m = manifest(&out);
    assert_eq!(m["status"], "runtime_failure");
    assert_eq!(m["failure_count"], 3);
}
