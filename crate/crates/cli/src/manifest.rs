//! Run manifests: the resolved configuration plus SHA-256 digests of every
//! input read and output written.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Config,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes).as_slice())
}

/// Collects output files and writes the manifest next to them.
pub struct OutputDir {
    dir: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &str) -> Result<Vec<u8>, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
        self.inputs.push(FileDigest {
            path: path.to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn finish(self, command: &str, config: &Config) -> Result<Vec<FileDigest>, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config: config.clone(),
            seed: config.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(qreading_core::Error::from)?;
        std::fs::write(self.dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(manifest.outputs)
    }
}
