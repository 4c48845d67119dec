//! Run manifests: what a run wrote, with SHA-256 digests, so a later
//! `report` can check that nothing changed underneath it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed manifest: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: listed artifact is missing")]
    Missing { path: PathBuf },
    #[error("{path}: digest mismatch (manifest {expected}, file {actual})")]
    Digest { path: PathBuf, expected: String, actual: String },
    #[error("{path}: manifest lists no summary.csv")]
    NoSummary { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved config in the config-file format.
    pub config: String,
    pub artifacts: Vec<ArtifactEntry>,
    pub stages: Vec<StageTiming>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: impl Into<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.into(),
            artifacts: Vec::new(),
            stages: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &str, contents: &[u8]) {
        self.artifacts.push(ArtifactEntry { path: path.into(), sha256: sha256_hex(contents), bytes: contents.len() as u64 });
    }

    pub fn artifact(&self, path: &str) -> Option<&ArtifactEntry> {
        self.artifacts.iter().find(|a| a.path == path)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest serializes");
        out.push(b'\n');
        out
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read(path).map_err(|source| ManifestError::Io { path: path.into(), source })?;
        serde_json::from_slice(&text).map_err(|source| ManifestError::Json { path: path.into(), source })
    }

    /// Checks every listed artifact under `dir` against its digest.
    pub fn verify(&self, dir: &Path) -> Result<(), ManifestError> {
        for a in &self.artifacts {
            let path = dir.join(&a.path);
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ManifestError::Missing { path }),
                Err(source) => return Err(ManifestError::Io { path, source }),
            };
            let actual = sha256_hex(&bytes);
            if actual != a.sha256 {
                return Err(ManifestError::Digest { path, expected: a.sha256.clone(), actual });
            }
        }
        Ok(())
    }
}

/// Accepts a manifest file or a run directory containing one.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}
