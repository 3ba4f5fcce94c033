//! The `manifest.json` written next to every command's outputs.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: Config,
    pub seeds: BTreeMap<String, u64>,
    pub backend: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Collects inputs and outputs while a command runs.
pub struct ManifestBuilder {
    manifest: RunManifest,
    out_dir: PathBuf,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &Config, out_dir: &Path) -> Self {
        let mut seeds = BTreeMap::new();
        seeds.insert("global".to_string(), config.seed);
        Self {
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                argv: std::env::args().collect(),
                config: config.clone(),
                seeds,
                backend: None,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                started_unix: now(),
                finished_unix: 0,
            },
            out_dir: out_dir.to_path_buf(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, stage: &str, seed: u64) {
        self.manifest.seeds.insert(stage.to_string(), seed);
    }

    pub fn backend(&mut self, description: String) {
        self.manifest.backend = Some(description);
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.manifest.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Path of an output file inside the run directory, recorded for digesting.
    pub fn output(&mut self, name: &str) -> PathBuf {
        let path = self.out_dir.join(name);
        self.outputs.push(path.clone());
        path
    }

    pub fn write(mut self) -> Result<PathBuf> {
        for path in &self.outputs {
            if path.exists() {
                let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
                self.manifest.outputs.insert(name, sha256_file(path)?);
            }
        }
        self.manifest.finished_unix = now();
        let path = self.out_dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
