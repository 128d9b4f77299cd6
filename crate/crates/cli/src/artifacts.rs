use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything needed to rerun a command: the resolved configuration with
/// all defaults filled in, seeds, inputs and hashes of what was written.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub argv: Vec<String>,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

/// Output directory that records a hash for every file written to it.
pub struct Artifacts {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &str, config: Value) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command: command.into(),
                version: env!("CARGO_PKG_VERSION"),
                argv: std::env::args().skip(1).collect(),
                config,
                seeds: BTreeMap::new(),
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
        })
    }

    pub fn set_config(&mut self, config: Value) {
        self.manifest.config = config;
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.manifest.seeds.insert(name.into(), seed);
    }

    /// Records an input file with its hash.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest.inputs.insert(path.display().to_string(), sha256(&bytes));
        Ok(())
    }

    /// Writes `name` inside the output directory.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.insert(name.into(), sha256(bytes));
        Ok(path)
    }

    /// Records a file written elsewhere.
    pub fn record_external(&mut self, path: &Path, bytes: &[u8]) {
        self.manifest.outputs.insert(path.display().to_string(), sha256(bytes));
    }

    pub fn finish(self) -> Result<PathBuf> {
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
