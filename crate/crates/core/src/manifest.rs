//! Run manifests: the configuration of a run, its seed and the SHA-256 digests of
//! its inputs and outputs, written as `manifest.json` next to the outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o failure on {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("malformed manifest: {0}")]
    Format(String),
    #[error("digest mismatch for {path}: recorded {recorded}, found {found}")]
    Mismatch { path: String, recorded: String, found: String },
}

fn io_error(path: &Path, e: std::io::Error) -> ManifestError {
    ManifestError::Io { path: path.to_path_buf(), message: e.to_string() }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path as given for inputs, relative to the output directory for outputs.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: &Path, label: String) -> Result<Self, ManifestError> {
        let data = std::fs::read(path).map_err(|e| io_error(path, e))?;
        Ok(Self { path: label, sha256: digest_bytes(&data), bytes: data.len() as u64 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    /// Effective configuration after defaults and overrides.
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self, ManifestError> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config).map_err(|e| ManifestError::Format(e.to_string()))?,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), ManifestError> {
        self.inputs.push(FileDigest::of(path, path.display().to_string())?);
        Ok(())
    }

    /// Records `dir/name`, which must already be written.
    pub fn add_output(&mut self, dir: &Path, name: &str) -> Result<(), ManifestError> {
        self.outputs.push(FileDigest::of(&dir.join(name), name.to_string())?);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Writes `dir/manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, ManifestError> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json() + "\n").map_err(|e| io_error(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        serde_json::from_str(&text).map_err(|e| ManifestError::Format(e.to_string()))
    }

    /// Re-hashes every recorded output under `dir`.
    pub fn verify_outputs(&self, dir: &Path) -> Result<(), ManifestError> {
        for out in &self.outputs {
            let found = FileDigest::of(&dir.join(&out.path), out.path.clone())?;
            if found.sha256 != out.sha256 {
                return Err(ManifestError::Mismatch {
                    path: out.path.clone(),
                    recorded: out.sha256.clone(),
                    found: found.sha256,
                });
            }
        }
        Ok(())
    }
}
