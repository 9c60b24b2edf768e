//! Run manifests: every file-producing run records what it did next to its
//! primary output, so a run can be audited and replayed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub wall_ms: u128,
}

pub struct ManifestBuilder {
    subcommand: String,
    started: Instant,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    config: serde_json::Value,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            config: serde_json::Value::Null,
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Snapshot of the fully-resolved parameters the run used.
    pub fn config<T: Serialize>(mut self, config: &T) -> Self {
        self.config = serde_json::to_value(config).expect("config snapshot serializes");
        self
    }

    /// Writes `<primary output stem>.manifest.json` next to the primary
    /// output.
    pub fn write(self, primary_output: &Path) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            subcommand: self.subcommand,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            seed: self.seed,
            threads: rayon::current_num_threads(),
            wall_ms: self.started.elapsed().as_millis(),
        };
        let path = primary_output.with_extension("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }
}
