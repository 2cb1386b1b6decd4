//! `metadata.json`: the resolved configuration, versions, timings and file list of a run.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qmrom_core::scenarios::ScenarioConfig;

use crate::config::config_hash;

pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub threads: usize,
    pub timings: Vec<Timing>,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
    /// Command-specific results.
    pub summary: serde_json::Value,
}

impl RunMetadata {
    pub fn new(command: &str, config: &ScenarioConfig, threads: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config_hash(config),
            config: config.clone(),
            threads,
            timings: Vec::new(),
            files: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    /// Runs `f` and records its wall time under `label`.
    pub fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(Timing {
            label: label.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn add_file(&mut self, relative: impl Into<String>) {
        self.files.push(relative.into());
    }

    /// Declared files that do not exist under `dir`.
    pub fn missing_files(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| !dir.join(f).is_file())
            .cloned()
            .collect()
    }

    /// Writes `metadata.json` after checking that every declared file exists.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        let missing = self.missing_files(dir);
        if !missing.is_empty() {
            bail!(
                "declared artifacts were not written: {}",
                missing.join(", ")
            );
        }
        if !self.files.iter().any(|f| f == METADATA_FILE) {
            self.files.push(METADATA_FILE.into());
        }
        let path = dir.join(METADATA_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(METADATA_FILE);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qmrom_core::scenarios::beam_cc;

    #[test]
    fn undeclared_files_block_the_write() {
        let dir = tempfile::tempdir().unwrap();
        let mut meta = RunMetadata::new("run", &beam_cc(), 1);
        meta.add_file("probe.csv");
        assert!(meta.write(dir.path()).is_err());
        std::fs::write(dir.path().join("probe.csv"), "t,u\n").unwrap();
        let value = meta.time("noop", || 7);
        assert_eq!(value, 7);
        meta.write(dir.path()).unwrap();
        let back = RunMetadata::read(dir.path()).unwrap();
        assert_eq!(back, meta);
        assert!(back.missing_files(dir.path()).is_empty());
        assert_eq!(back.config, beam_cc());
    }
}
