use std::path::Path;
use std::process::{Command, Output};

use csi_core::quantizer::Codebook;

const TINY: &str = r#"{
    "total_antennas": 4, "antennas_per_ap": 2, "users": 2, "tau": 2,
    "bits_per_dim": 1, "n_training": 20, "trials": 2, "large_scale_realizations": 2
}"#;

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csi-sim")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_reports_every_check() {
    let out = sim(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "name,status,deviation,threshold");
    assert_eq!(lines.len(), 6);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(1) == Some("pass")));
}

#[test]
fn run_is_reproducible_and_seedable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", TINY);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(sim(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(sim(&["run", "--config", &cfg, "--out", b.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with(
        "axis,axis_value,scheme,mse_mean,mse_stderr,trials,large_scale_realizations,bits_per_dim,n_antennas,seed,config_digest\n"
    ));
    assert_eq!(text.lines().count(), 6);

    let stdout = sim(&["run", "--config", &cfg, "--seed", "5"]);
    assert!(stdout.status.success());
    let other = String::from_utf8(stdout.stdout).unwrap();
    assert_ne!(other, text);
    assert!(other.lines().nth(1).unwrap().contains(",5,"));
}

#[test]
fn sweep_writes_one_row_per_value_and_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", &TINY.replace('}', r#", "schemes": ["VQ_QE", "SQ_QE"]}"#));
    let out = dir.path().join("s.csv");
    let res = sim(&["sweep", "--config", &cfg, "--axis", "tx_power", "--values", "-40,-20", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().starts_with("tx_power,-4e1,VQ_QE,"));
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", TINY);
    let out = dir.path().join("s.csv");
    let out = out.to_str().unwrap();

    let res = sim(&["sweep", "--config", &cfg, "--axis", "antennas_per_ap", "--values", "3", "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("antennas_per_ap = 3"));

    let res = sim(&["sweep", "--config", &cfg, "--axis", "nope", "--values", "1", "--out", out]);
    assert_eq!(res.status.code(), Some(1));

    let bad = write(dir.path(), "bad.json", r#"{"users": 3, "tau": 2, "trials": 0}"#);
    let res = sim(&["run", "--config", &bad]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("tau") && err.contains("trials"), "{err}");

    let unknown = write(dir.path(), "unknown.json", r#"{"userz": 3}"#);
    assert_eq!(sim(&["run", "--config", &unknown]).status.code(), Some(1));
}

#[test]
fn train_codebook_writes_a_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", TINY);
    let path = dir.path().join("cb.bin");
    let res = sim(&["train-codebook", "--config", &cfg, "--out", path.to_str().unwrap(), "--kind", "eq", "--ap", "1"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let cb = Codebook::load(&path).unwrap();
    assert_eq!((cb.dim(), cb.size()), (2, 4));
    assert_eq!(cb.training_meta.n_training_samples, 2 * 20 * 2);

    let res = sim(&["train-codebook", "--config", &cfg, "--out", path.to_str().unwrap(), "--ap", "7"]);
    assert_eq!(res.status.code(), Some(1));
}
