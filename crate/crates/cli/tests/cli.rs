use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pathmeasure"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn decay_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "decay",
        "--config",
        config("decay").to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let vertex: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("vertex.json")).unwrap()).unwrap();
    let t = vertex["t"].as_f64().unwrap();
    assert!((t - 8.267949).abs() < 1e-6);
    assert!((t - (10.0 - 3f64.sqrt())).abs() < 1e-12);
    assert_eq!(manifest(dir.path())["summary"]["method"], "closed_form");
}

#[test]
fn bernoulli_mean_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "--config",
        config("bernoulli").to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let m = manifest(dir.path());
    let mean = m["summary"]["mean_zero_frequency"].as_f64().unwrap();
    assert!((0.49..=0.51).contains(&mean), "{mean}");
    let seqs = std::fs::read_to_string(dir.path().join("sequences.txt")).unwrap();
    assert_eq!(seqs.lines().count(), 200);
    assert!(seqs
        .lines()
        .all(|l| l.len() == 10_000 && l.bytes().all(|b| b == b'0' || b == b'1')));
}

#[test]
fn manifest_lists_every_artifact_with_its_hash() {
    use sha2::{Digest, Sha256};
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "correlate",
        "--config",
        config("correlate").to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let m = manifest(dir.path());
    let listed = m["artifacts"].as_array().unwrap();
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut names: Vec<String> = listed
        .iter()
        .map(|a| a["path"].as_str().unwrap().to_string())
        .collect();
    names.sort();
    assert_eq!(names, on_disk);
    for a in listed {
        let bytes = std::fs::read(dir.path().join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(
            a["sha256"].as_str().unwrap(),
            hex::encode(Sha256::digest(&bytes))
        );
    }
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_masses_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "propagate", "parameters": {"hamiltonian": {"dimension": 1, "potential": {"kind": "free"}},
            "positions": [0.0], "momenta": [1.0], "t_end": 1.0}, "output_dir": "unused"}"#,
    )
    .unwrap();
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("masses"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(
        run(&["run", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );

    let late = dir.path().join("late.json");
    std::fs::write(
        &late,
        r#"{"experiment": "decay", "parameters": {"m1": 10, "m2": 3, "m3": 2, "c": 1, "t_i": 9, "t_f": 10,
            "x1": [0], "x2": [2], "x3": [-3]}, "output_dir": "unused"}"#,
    )
    .unwrap();
    assert_eq!(
        run(&["run", "--config", late.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );

    // subcommand and config disagree
    let out = run(&[
        "scatter",
        "--config",
        config("decay").to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let syntax = dir.path().join("syntax.json");
    std::fs::write(&syntax, "{\n  \"experiment\": \"decay\",\n  \"seed\": ,\n}").unwrap();
    let out = run(&["run", "--config", syntax.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn seed_flag_overrides_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("bernoulli");
    for (dir, seed) in [(&a, "1"), (&b, "2")] {
        let out = run(&[
            "bernoulli",
            "--config",
            cfg.to_str().unwrap(),
            "--output",
            dir.path().to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(out.status.success());
    }
    assert_eq!(manifest(a.path())["seed"], 1);
    let fa = std::fs::read(a.path().join("frequencies.csv")).unwrap();
    let fb = std::fs::read(b.path().join("frequencies.csv")).unwrap();
    assert_ne!(fa, fb);
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let one = tempfile::tempdir().unwrap();
    let four = tempfile::tempdir().unwrap();
    let cfg = config("fringes");
    for (dir, n) in [(&one, "1"), (&four, "4")] {
        let out = run(&[
            "fringes",
            "--config",
            cfg.to_str().unwrap(),
            "--output",
            dir.path().to_str().unwrap(),
            "--threads",
            n,
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(one.path().join("fringes.csv")).unwrap(),
        std::fs::read(four.path().join("fringes.csv")).unwrap()
    );
}
