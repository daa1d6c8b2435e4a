use std::path::Path;
use std::process::{Command, Output};

use entangle_core::harness::{CheckRecord, Status};
use entangle_core::packing::{separation_check, PackingJson, UnitaryPacking};

fn entangle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entangle"))
        .args(args)
        .env_remove("ENTANGLE_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json_records(bytes: &[u8]) -> Vec<CheckRecord> {
    serde_json::from_slice(bytes).expect("json report")
}

fn csv_records(bytes: &[u8]) -> Vec<CheckRecord> {
    csv::Reader::from_reader(bytes).deserialize().collect::<Result<_, _>>().expect("csv report")
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn verify_exit_codes() {
    let o = entangle(&["verify", "--suite", "convexity", "--lambda", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_records(&o.stdout).len(), 1);

    assert_eq!(code(&entangle(&["verify", "--lambda", "0"])), 2);
    assert_eq!(code(&entangle(&["verify", "--lambda", "3..1"])), 2);
    assert_eq!(code(&entangle(&["verify", "--suite", "nope", "--lambda", "1"])), 2);
    assert_eq!(code(&entangle(&["verify", "--suite", "convexity", "--lambda", "1", "--tolerance", "-1"])), 2);
    assert_eq!(code(&entangle(&["verify", "--format", "xml"])), 2);
    assert_eq!(code(&entangle(&["bogus"])), 2);
}

#[test]
fn verify_all_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let o = entangle(&["verify", "--suite", "all", "--lambda", "1..3", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(read(&a), read(&b));
    let records = json_records(&read(&a));
    assert!(records.len() >= 20);
    assert!(records.iter().all(|r| r.status != Status::Fail));
    let keys: Vec<_> = records.iter().map(|r| (r.name.clone(), r.lambda, r.key.clone())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn csv_and_json_agree() {
    let args = ["verify", "--suite", "lu-invariance,monotonicity,counterexample", "--lambda", "1,2", "--seed", "3"];
    let json = entangle(&[&args[..], &["--format", "json"]].concat());
    let csv = entangle(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(code(&json), 0);
    assert_eq!(code(&csv), 0);
    let (j, c) = (json_records(&json.stdout), csv_records(&csv.stdout));
    assert_eq!(j.len(), 11);
    assert_eq!(j, c);
}

#[test]
fn seed_env_overrides_flag() {
    let base = entangle(&["verify", "--suite", "convexity", "--lambda", "1", "--seed", "11"]);
    let other = entangle(&["verify", "--suite", "convexity", "--lambda", "1", "--seed", "12"]);
    assert_ne!(base.stdout, other.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_entangle"))
        .args(["verify", "--suite", "convexity", "--lambda", "1", "--seed", "12"])
        .env("ENTANGLE_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(env.stdout, base.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_entangle"))
        .args(["verify", "--suite", "convexity", "--lambda", "1"])
        .env("ENTANGLE_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

fn packing_from(out: &Output) -> UnitaryPacking {
    let json: PackingJson = serde_json::from_slice(&out.stdout).unwrap();
    UnitaryPacking::from_json(&json).unwrap()
}

#[test]
fn net_command() {
    let o = entangle(&["net", "--m", "1", "--eta", "0.3", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let p = packing_from(&o);
    assert!(p.len() >= 2 && separation_check(&p, 1));

    let o = entangle(&["net", "--m", "1", "--eta", "0.99"]);
    assert_eq!(code(&o), 0);
    assert_eq!(packing_from(&o).len(), 1);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let o = entangle(&["net", "--m", "2", "--eta", "0.5", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let json: PackingJson = serde_json::from_slice(&read(&out)).unwrap();
    assert!(separation_check(&UnitaryPacking::from_json(&json).unwrap(), 2));

    assert_eq!(code(&entangle(&["net", "--m", "3", "--eta", "0.5"])), 2);
    assert_eq!(code(&entangle(&["net", "--eta", "1.5"])), 2);
    assert_eq!(code(&entangle(&["net", "--eta", "0"])), 2);
    assert_eq!(code(&entangle(&["net", "--eta", "0.5", "--format", "csv"])), 2);
}

#[test]
fn counterexample_command() {
    let o = entangle(&["counterexample", "--m", "1", "--eps", "0"]);
    assert_eq!(code(&o), 0);
    let r = &json_records(&o.stdout)[0];
    assert_eq!(r.status, Status::Pass);
    assert!(r.lhs < 1.0 - 1e-6);

    let o = entangle(&["counterexample", "--m", "2", "--eps", "0.25"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_records(&o.stdout)[0].status, Status::Inconclusive);
    assert!(String::from_utf8_lossy(&o.stderr).contains("inconclusive"));

    assert_eq!(code(&entangle(&["counterexample", "--m", "1", "--eps", "1.5"])), 2);
}

#[test]
fn demo_command() {
    for (protocol, n) in [("teleport", "1"), ("teleport", "2"), ("unrotate", "1"), ("unrotate", "2")] {
        let o = entangle(&["demo", protocol, "--n", n, "--seed", "5"]);
        assert_eq!(code(&o), 0, "{protocol} {n}: {}", String::from_utf8_lossy(&o.stderr));
        let records = json_records(&o.stdout);
        assert!(records[0].lhs <= 1e-9);
        assert!(records[1].pass, "budget");
    }
    let o = entangle(&["demo", "bbpssw", "--fidelity", "0.8"]);
    assert_eq!(code(&o), 0);
    let r = &json_records(&o.stdout)[0];
    assert!((r.rhs - 145.0 / 173.0).abs() < 1e-9);
    assert!(r.rhs > r.lhs);

    assert_eq!(code(&entangle(&["demo", "swap"])), 2);
    assert_eq!(code(&entangle(&["demo", "teleport", "--n", "3"])), 2);
}
