use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<FileDigest>,
    pub params: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Collects outputs in memory so they can be digested before the manifest
/// is written.
pub struct Run {
    command: &'static str,
    dir: PathBuf,
    inputs: Vec<FileDigest>,
    params: BTreeMap<String, Value>,
    seed: Option<u64>,
    outputs: Vec<(String, Vec<u8>)>,
}

impl Run {
    pub fn new(command: &'static str, dir: &Path) -> Self {
        Self {
            command,
            dir: dir.to_path_buf(),
            inputs: Vec::new(),
            params: BTreeMap::new(),
            seed: None,
            outputs: Vec::new(),
        }
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("parameters serialize");
        self.params.insert(name.to_string(), v);
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn output(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.outputs.push((name.into(), bytes));
    }

    pub fn json_output(&mut self, name: impl Into<String>, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.output(name, bytes);
        Ok(())
    }

    /// Writes every output and the manifest; returns the written paths.
    pub fn finish(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let mut written = Vec::new();
        let mut digests = Vec::new();
        for (name, bytes) in &self.outputs {
            let path = self.dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            digests.push(FileDigest {
                path: name.clone(),
                sha256: sha256_hex(bytes),
            });
            written.push(path);
        }
        let manifest = RunManifest {
            command: self.command.to_string(),
            inputs: self.inputs,
            params: self.params,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: digests,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.command));
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(written)
    }
}

/// Two-decimal currency rendering.
pub fn cents(v: f64) -> String {
    format!("{v:.2}")
}

/// Currency rounded to cents for JSON output.
pub fn cents_value(v: f64) -> f64 {
    cents(v).parse().expect("formatted float parses")
}
