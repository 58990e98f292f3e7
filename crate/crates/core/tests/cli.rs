//! End-to-end runs of the `reinsure` binary: outputs, round trips,
//! determinism and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reinsure"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn reproduce_layer_writes_its_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "layer", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("summary.json"));
    let a = summary["a_star"].as_f64().unwrap();
    assert!((a - 1.0).abs() < 1e-3, "{a}");
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, summary);
    let curve = fs::read_to_string(dir.path().join("contract.csv")).unwrap();
    assert!(curve.starts_with("z,H,I,Phi\n"));
}

#[test]
fn reproduce_stoploss_matches_the_deductible() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "stoploss", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0);
    let summary = json(&dir.path().join("summary.json"));
    let d = summary["d_star"].as_f64().unwrap();
    assert!((d - 1.5936242600400374).abs() < 1e-6, "{d}");
    assert_eq!(summary["certificate"]["passed"], Value::Bool(true));
}

#[test]
fn paranoid_solve_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("wang.json");
    let out = run(&["--config", s(&cfg), "--out", s(dir.path()), "--paranoid", "solve"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["route"], "ode");
    assert_eq!(summary["optimality"]["passed"], Value::Bool(true));
    let check = &summary["route_check"];
    assert!(check["sup_distance"].as_f64().unwrap() <= check["bound"].as_f64().unwrap());

    let contract = dir.path().join("contract.csv");
    let out = run(&["--config", s(&cfg), "--out", s(dir.path()), "verify", "--contract", s(&contract)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("verify.json"))["passed"], Value::Bool(true));

    let out = run(&["--config", s(&cfg), "price", "--contract", s(&contract)]);
    assert_eq!(code(&out), 0);
    let price: Value = serde_json::from_slice(&out.stdout).unwrap();
    let premium = summary["premium"].as_f64().unwrap();
    assert!((price["dual"].as_f64().unwrap() - premium).abs() < 1e-6 * (1.0 + premium));
}

#[test]
fn empirical_claims_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--config", s(&config("claims.json")), "--out", s(dir.path()), "solve"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("summary.json"))["route"], "qp");
}

#[test]
fn outputs_are_deterministic() {
    let (one, two) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config("wang.json");
    for dir in [&one, &two] {
        assert_eq!(code(&run(&["--config", s(&cfg), "--out", s(dir.path()), "solve"])), 0);
    }
    for file in ["summary.json", "contract.csv"] {
        assert_eq!(fs::read(one.path().join(file)).unwrap(), fs::read(two.path().join(file)).unwrap(), "{file}");
    }

    let sim = |dir: &Path, seed: &str| {
        let out = run(&["--config", s(&cfg), "--out", s(dir), "--seed", seed, "simulate"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(dir.join("summary.json")).unwrap()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(sim(a.path(), "5"), sim(b.path(), "5"));
    assert_ne!(sim(a.path(), "5"), sim(b.path(), "6"));
}

#[test]
fn recorded_paths_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("wang.json")).unwrap().replace("\"n_paths\": 20000", "\"n_paths\": 50, \"record_paths\": true");
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, text).unwrap();
    assert_eq!(code(&run(&["--config", s(&cfg), "--out", s(dir.path()), "simulate"])), 0);
    let paths = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    assert_eq!(paths.lines().count(), 51);
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const EXP_IDENTITY: &str = r#"{
    "distribution": {"kind": "exponential", "params": {"mean": 1}},
    "distortion": {"kind": "identity"},
    "market": {"pi": 1.5, "theta0": 1}
}"#;

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let good = write(d, "good.json", EXP_IDENTITY);

    // premium below the expected loss
    let cheap = write(d, "cheap.json", &EXP_IDENTITY.replace("1.5", "0.9"));
    let out = run(&["--config", s(&cheap), "--out", s(d), "solve"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected loss"));

    // malformed and unknown-field configs
    assert_eq!(code(&run(&["--config", s(&write(d, "bad.json", "{")), "solve"])), 5);
    let unknown = write(d, "unknown.json", &EXP_IDENTITY.replace("\"market\"", "\"markets\": 1, \"market\""));
    assert_eq!(code(&run(&["--config", s(&unknown), "solve"])), 5);
    assert_eq!(code(&run(&["solve"])), 5);
    assert_eq!(code(&run(&["frobnicate"])), 5);

    // an indemnity that decreases
    let decreasing = write(d, "dec.csv", "z,value\n0,0\n1,0.5\n2,0.2\n");
    let out = run(&["--config", s(&good), "--out", s(d), "verify", "--contract", s(&decreasing)]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("I(z) - I(z') >= 0"));

    // admissible but not optimal: stop-loss with the wrong deductible
    let wrong = write(d, "wrong.csv", "z,value\n0,0\n3,0\n4,1\n");
    let out = run(&["--config", s(&good), "--out", s(d), "verify", "--contract", s(&wrong)]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&d.join("verify.json"))["passed"], Value::Bool(false));

    // the optimal stop-loss passes
    let right = write(d, "right.csv", "z,value\n0,0\n1.5936242600400374,0\n2.5936242600400374,1\n");
    assert_eq!(code(&run(&["--config", s(&good), "--out", s(d), "verify", "--contract", s(&right)])), 0);
}
