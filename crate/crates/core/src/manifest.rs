//! `manifest.json` written next to every command's outputs.
//!
//! Timestamps come from `SOURCE_DATE_EPOCH` when set, so a manifest can be
//! reproduced byte for byte; other outputs never embed time or thread count.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn now() -> SystemTime {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .map_or_else(SystemTime::now, |s| UNIX_EPOCH + Duration::from_secs(s))
}

pub fn timestamp(t: SystemTime) -> String {
    humantime::format_rfc3339_seconds(t).to_string()
}

pub fn hash_file(path: impl AsRef<Path>) -> Result<InputHash> {
    let path = path.as_ref();
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        h.update(&buf[..n]);
    }
    let sha256 = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(InputHash {
        path: path.display().to_string(),
        sha256,
        bytes,
    })
}

/// Accumulates inputs and outputs for one command, then writes the manifest.
#[derive(Debug)]
pub struct ManifestBuilder {
    out_dir: PathBuf,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(
        command: &str,
        args: Vec<String>,
        seed: u64,
        config: &impl Serialize,
        out_dir: impl Into<PathBuf>,
    ) -> Result<Self> {
        Ok(ManifestBuilder {
            out_dir: out_dir.into(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                args,
                seed,
                config: serde_json::to_value(config).map_err(|e| Error::Format(e.to_string()))?,
                inputs: Vec::new(),
                outputs: Vec::new(),
                started_at: timestamp(now()),
                finished_at: String::new(),
            },
        })
    }

    pub fn input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.manifest.inputs.push(hash_file(path)?);
        Ok(())
    }

    /// Records an output by its name relative to the output directory.
    pub fn output(&mut self, name: impl Into<String>) {
        self.manifest.outputs.push(name.into());
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.finished_at = timestamp(now());
        self.manifest.inputs.sort_by(|a, b| a.path.cmp(&b.path));
        self.manifest.outputs.sort();
        let path = self.out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(self.manifest)
    }
}
