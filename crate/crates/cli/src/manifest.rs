//! Run manifests: command line, configuration echo, tool version, wall-clock
//! span, and the byte size plus SHA-256 digest of every output file.

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<OutputEntry>,
}

pub struct ManifestBuilder {
    command: String,
    config: Option<serde_json::Value>,
    started: f64,
    outputs: Vec<PathBuf>,
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl ManifestBuilder {
    /// Starts a manifest from the process argv.
    pub fn from_args() -> ManifestBuilder {
        let command = std::env::args().collect::<Vec<_>>().join(" ");
        ManifestBuilder {
            command,
            config: None,
            started: now_unix(),
            outputs: Vec::new(),
        }
    }

    pub fn config(&mut self, cfg: serde_json::Value) -> &mut Self {
        self.config = Some(cfg);
        self
    }

    /// Registers an output file (must exist by the time `write` runs).
    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    /// Digests every output and writes `manifest.json` next to them.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for p in &self.outputs {
            let bytes = std::fs::metadata(p)?.len();
            outputs.push(OutputEntry {
                path: p
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string()),
                bytes,
                sha256: sha256_file(p)?,
            });
        }
        let manifest = RunManifest {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config.clone(),
            started_unix: self.started,
            finished_unix: now_unix(),
            outputs,
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let data = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&data);
    Ok(format!("{:x}", hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_outputs_with_digests() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("data.csv");
        std::fs::write(&f, "a,b\n1,2\n").unwrap();
        let mut b = ManifestBuilder::from_args();
        b.output(&f);
        let path = b.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["outputs"][0]["path"], "data.csv");
        assert_eq!(v["outputs"][0]["bytes"], 8);
        assert_eq!(v["outputs"][0]["sha256"], sha256_file(&f).unwrap());
    }
}
