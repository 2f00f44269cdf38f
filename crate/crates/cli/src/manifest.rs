//! Output directories with a checksummed inventory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    /// `None` when the measured value is not finite (JSON has no NaN/inf).
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical JSON config.
    pub config_hash: String,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileEntry>,
    pub checks: Vec<CheckEntry>,
    pub warnings: Vec<String>,
}

/// Writes files under one directory, recording each in the inventory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
    pub checks: Vec<CheckEntry>,
    pub warnings: Vec<String>,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.retain(|f| f.path != relative);
        self.files.push(FileEntry {
            path: relative.to_owned(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn check(&mut self, name: &str, pass: bool, value: f64, detail: impl Into<String>) {
        self.checks.push(CheckEntry {
            name: name.to_owned(),
            pass,
            value: value.is_finite().then_some(value),
            detail: detail.into(),
        });
    }

    /// Writes `manifest.json` last; it is not part of its own inventory.
    pub fn finish(self, command: &str, config_json: &str) -> CliResult<ExperimentManifest> {
        let manifest = ExperimentManifest {
            tool: "dephase".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: sha256_hex(config_json.as_bytes()),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            files: self.files,
            checks: self.checks,
            warnings: self.warnings,
        };
        let path = self.root.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn read_manifest(dir: &Path) -> CliResult<ExperimentManifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Differences between a manifest's inventory and the directory contents.
#[derive(Debug, Default, PartialEq)]
pub struct InventoryDiff {
    pub missing: Vec<String>,
    pub corrupted: Vec<String>,
}

impl InventoryDiff {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.corrupted.is_empty()
    }
}

impl std::fmt::Display for InventoryDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for m in &self.missing {
            writeln!(f, "- {m} (missing)")?;
        }
        for c in &self.corrupted {
            writeln!(f, "! {c} (checksum mismatch)")?;
        }
        Ok(())
    }
}

pub fn verify_inventory(dir: &Path, manifest: &ExperimentManifest) -> InventoryDiff {
    let mut diff = InventoryDiff::default();
    let listed: BTreeSet<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    for path in listed {
        let entry = manifest.files.iter().find(|f| f.path == path).expect("listed");
        match std::fs::read(dir.join(path)) {
            Err(_) => diff.missing.push(path.to_owned()),
            Ok(bytes) if sha256_hex(&bytes) != entry.sha256 => diff.corrupted.push(path.to_owned()),
            Ok(_) => {}
        }
    }
    diff
}
