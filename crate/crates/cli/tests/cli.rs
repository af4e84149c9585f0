use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use abac_logmine::format::{parse_data, parse_policy};
use abac_logmine::log::summarize;
use abac_logmine::abac::AbacPolicy;

fn fixture(name: &str, file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).join(file)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abac-mine")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn seeded_mining_matches_the_golden_policy() {
    let dir = tempfile::tempdir().unwrap();
    let report = ok(&[
        "mine",
        "--data",
        s(&fixture("fragment", "data.json")),
        "--log",
        s(&fixture("fragment", "log.csv")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(read(dir.path().join("policy.txt")), read(fixture("fragment", "mined.policy")));
    assert_eq!(read(dir.path().join("report.txt")), report);
    assert!(report.contains("underAssigned=0\n"));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "mine");
    assert_eq!(manifest["config"]["wo"], 35.0);
}

#[test]
fn atm_mining_writes_a_valid_policy() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "mine",
        "--algo",
        "atm",
        "--k",
        "1",
        "--seed",
        "3",
        "--data",
        s(&fixture("fragment", "data.json")),
        "--log",
        s(&fixture("fragment", "log.csv")),
        "--out",
        s(dir.path()),
    ]);
    let data = parse_data(&read(fixture("fragment", "data.json"))).unwrap();
    let text = parse_policy(&read(dir.path().join("policy.txt"))).unwrap();
    let p = AbacPolicy::new(data.data, text.operations.unwrap(), text.rules).unwrap();
    let log = abac_logmine::format::parse_log(&read(fixture("fragment", "log.csv"))).unwrap();
    let granted = p.evaluator().universe().named(&p.meaning().unwrap());
    assert!(summarize(&log).unwrap().tuples().iter().any(|t| granted.contains(t)));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["seeds"]["anneal"], 3);
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["mine", "--data", "no-such-file.json", "--log", "x.csv", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-file.json"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["mine", "--data", "d.json"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn parse_errors_name_the_file_and_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.policy");
    std::fs::write(&bad, "operations: {addScore, readScore}\nrule: position in faculty; true; {addScore}; true\n").unwrap();
    let out = run(&[
        "eval",
        "--data",
        s(&fixture("fragment", "data.json")),
        "--original",
        s(&fixture("fragment", "original.policy")),
        "--mined",
        s(&bad),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("parse error at 2:") && err.contains("bad.policy"), "{err}");
}

#[test]
fn synthesis_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(&["synth", "--nrule", "20", "--seed", "7", "--out", s(d.path())]);
    }
    for f in ["policy.txt", "data.json"] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    ok(&["synth", "--nrule", "20", "--seed", "8", "--out", s(c.path())]);
    assert_ne!(read(a.path().join("policy.txt")), read(c.path().join("policy.txt")));
}

#[test]
fn complete_log_is_mined_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("fragment", "data.json");
    let original = fixture("fragment", "original.policy");
    ok(&["genlog", "--data", s(&data), "--policy", s(&original), "--completeness", "1.0", "--seed", "5", "--out", s(dir.path())]);
    let mined = dir.path().join("mined");
    ok(&["mine", "--data", s(&data), "--log", s(&dir.path().join("log.csv")), "--out", s(&mined)]);
    let report = ok(&["eval", "--data", s(&data), "--original", s(&original), "--mined", s(&mined.join("policy.txt"))]);
    assert!(report.contains("semSim=1.000\n"), "{report}");
}

#[test]
fn summaries_can_replace_logs() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("university", "data.json");
    let original = fixture("university", "original.policy");
    ok(&[
        "genlog", "--data", s(&data), "--policy", s(&original), "--summary", "--ratios", "skewed", "--out", s(dir.path()),
    ]);
    let mined = dir.path().join("mined");
    ok(&["mine", "--data", s(&data), "--summary", s(&dir.path().join("summary.csv")), "--out", s(&mined)]);
    let report = ok(&["eval", "--data", s(&data), "--original", s(&original), "--mined", s(&mined.join("policy.txt"))]);
    assert!(report.contains("semSim=1.000\n"), "{report}");
}

#[test]
fn policy_compared_with_itself() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture("healthcare", "original.policy");
    let report = ok(&[
        "eval",
        "--data",
        s(&fixture("healthcare", "data.json")),
        "--original",
        s(&p),
        "--mined",
        s(&p),
        "--out",
        s(dir.path()),
    ]);
    assert!(report.starts_with("synSim=1.000\nsemSim=1.000\n"), "{report}");
    assert_eq!(read(dir.path().join("report.txt")), report);
    assert!(dir.path().join("manifest.json").exists());
}
