use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to reproduce one command.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, verbatim.
    pub argv: Vec<String>,
    /// The parsed configuration with every default filled in.
    pub config: serde_json::Value,
    pub threads: usize,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_seconds: f64,
}

pub struct Recorder {
    start: Instant,
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub threads: usize,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
}

impl Recorder {
    pub fn new(command: &str, argv: &[String], config: serde_json::Value, threads: usize) -> Self {
        Self {
            start: Instant::now(),
            command: command.to_string(),
            argv: argv.to_vec(),
            config,
            threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    pub fn write(self, path: &Path) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command,
            argv: self.argv,
            config: self.config,
            threads: self.threads,
            inputs: self.inputs,
            outputs: self.outputs,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
        };
        fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
