//! Output directory with content digests and the JSON manifest.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub tasks: Vec<String>,
    pub scenario: Value,
    pub files: Vec<FileEntry>,
    pub summary: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects files written below one directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Renders `name` through `render` and records its digest.
    pub fn write<F>(&mut self, name: &str, render: F) -> CliResult<()>
    where
        F: FnOnce(&mut Vec<u8>) -> io::Result<()>,
    {
        let mut buf = Vec::new();
        let path = self.root.join(name);
        render(&mut buf).map_err(|e| CliError::io(&path, e))?;
        std::fs::File::create(&path).and_then(|mut f| f.write_all(&buf)).map_err(|e| CliError::io(&path, e))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.to_string(), sha256: digest(&buf), bytes: buf.len() as u64 });
        Ok(())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes the manifest listing every file written so far.
    pub fn finish(self, mut manifest: Manifest) -> CliResult<Manifest> {
        manifest.files = self.files;
        let path = self.root.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::io(&path, e.into()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Rechecks the digests of a manifest against the files on disk. Returns
/// the paths that differ.
pub fn verify(root: &Path, manifest: &Manifest) -> CliResult<Vec<String>> {
    let mut bad = Vec::new();
    for f in &manifest.files {
        let path = root.join(&f.path);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        if digest(&bytes) != f.sha256 {
            bad.push(f.path.clone());
        }
    }
    Ok(bad)
}
