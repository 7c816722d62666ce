//! Run manifests: what was run, on which bytes, producing which bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::Command;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(role: &str, path: &Path) -> Result<Self, CliError> {
        let data = fs::read(path).map_err(CliError::io(path))?;
        Ok(Self { role: role.to_string(), path: path.to_path_buf(), sha256: sha256_hex(&data), bytes: data.len() as u64 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Arguments as invoked, with every path made absolute.
    pub argv: Vec<String>,
    pub command: Command,
    /// Global `--seed`, when given.
    pub seed: Option<u64>,
    pub configs: Vec<FileDigest>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub threads: usize,
    pub timing: Timing,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::ConfigParse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(path, text + "\n").map_err(CliError::io(path))
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}
