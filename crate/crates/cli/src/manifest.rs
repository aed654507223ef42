use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FORMAT: &str = "ktmforge-run-manifest";

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to re-run a command: arguments, resolved settings,
/// input hashes and the files written.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub format: &'static str,
    pub version: u32,
    pub command: String,
    pub argv: Vec<String>,
    pub code_version: &'static str,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputFile>,
    pub started_at: u64,
    pub finished_at: u64,
    /// Written files, relative to the manifest's directory where possible.
    pub artifacts: Vec<PathBuf>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn file_sha256(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT,
            version: 1,
            command: command.to_string(),
            argv: std::env::args().collect(),
            code_version: env!("CARGO_PKG_VERSION"),
            seed,
            seeds: Vec::new(),
            config,
            inputs: Vec::new(),
            started_at: unix_now(),
            finished_at: 0,
            artifacts: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.inputs.push(InputFile {
            path: path.to_path_buf(),
            sha256: file_sha256(path)?,
        });
        Ok(())
    }

    /// Writes the manifest to `path`, listing `artifacts` relative to its directory.
    pub fn write(mut self, path: &Path, artifacts: &[PathBuf]) -> anyhow::Result<PathBuf> {
        let base = path.parent().unwrap_or(Path::new(""));
        self.artifacts = artifacts
            .iter()
            .map(|a| a.strip_prefix(base).map(Path::to_path_buf).unwrap_or_else(|_| a.clone()))
            .collect();
        self.finished_at = unix_now();
        let text = serde_json::to_string_pretty(&self)? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path.to_path_buf())
    }
}

/// `<file>.manifest.json` next to a single-file output.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}
