use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Written as `manifest.json` next to every command's outputs. Replaying
/// `argv` with the same inputs reproduces the outputs byte for byte; only
/// `elapsed_secs` varies between runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub argv: Vec<String>,
    pub config: Value,
    /// Every random stream is a ChaCha8 generator seeded from this map.
    pub rng: &'static str,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub elapsed_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: Value) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            argv: argv.to_vec(),
            config,
            rng: "ChaCha8",
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            elapsed_secs: 0.0,
        }
    }

    pub fn seed(mut self, name: &str, seed: u64) -> Self {
        self.seeds.insert(name.to_string(), seed);
        self
    }

    pub fn inputs(mut self, paths: &[&Path]) -> Self {
        self.inputs = paths.iter().map(|p| p.to_path_buf()).collect();
        self
    }

    pub fn write(&self, dir: &Path) -> abac_logmine::Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(dir.join("manifest.json"), s)?;
        Ok(())
    }
}
