use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ttlab_core::io::sha256_hex;

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
}

/// Writes artifacts under one directory and records each with its hash.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::runtime(root.display(), e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::runtime(path.display(), e))?;
        self.files.retain(|f| f.path != name);
        self.files.push(ManifestEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(path)
    }

    pub fn finish(mut self, command: &str, seed: u64) -> Result<Manifest, CliError> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let m = Manifest { command: command.to_string(), seed, files: self.files };
        let text = serde_json::to_string_pretty(&m).expect("manifest serialises");
        let path = self.root.join(MANIFEST);
        fs::write(&path, text + "\n").map_err(|e| CliError::runtime(path.display(), e))?;
        Ok(m)
    }
}
