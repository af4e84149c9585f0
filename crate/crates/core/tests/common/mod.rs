#![allow(dead_code)]

pub mod metric_examples;
pub mod micro;
pub mod noise;

use std::path::PathBuf;

use abac_logmine::abac::AbacPolicy;
use abac_logmine::format::{parse_data, parse_log, parse_policy};
use abac_logmine::log::{summarize, LogSummary};

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Attribute data plus the hand-written rules of a fixture.
pub fn load_policy(name: &str) -> AbacPolicy {
    let dir = fixture_dir(name);
    let data = parse_data(&std::fs::read_to_string(dir.join("data.json")).unwrap()).unwrap();
    let text = parse_policy(&std::fs::read_to_string(dir.join("original.policy")).unwrap()).unwrap();
    let ops = text.operations.or(data.operations).expect("fixture lists operations");
    AbacPolicy::new(data.data, ops, text.rules).unwrap()
}

pub fn load_log_summary(name: &str) -> LogSummary {
    let src = std::fs::read_to_string(fixture_dir(name).join("log.csv")).unwrap();
    summarize(&parse_log(&src).unwrap()).unwrap()
}

pub const MINI_POLICIES: [&str; 3] = ["university", "healthcare", "project"];
