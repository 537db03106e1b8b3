use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// Output directory that records every file read or written, with hashes.
pub struct OutDir {
    root: PathBuf,
    command: String,
    seed: Option<u64>,
    inputs: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl OutDir {
    pub fn create(root: &Path, command: &str, seed: Option<u64>) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            command: command.to_string(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push((name.to_string(), sha256_hex(bytes)));
        Ok(path)
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| fuzzyrec::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.inputs.push((path.display().to_string(), sha256_hex(&bytes)));
        Ok(())
    }

    /// Writes `manifest.txt`: the command, the seed and one
    /// `input|output <sha256> <path>` line per file.
    pub fn finish(self) -> Result<()> {
        let mut text = format!("command {}\n", self.command);
        match self.seed {
            Some(seed) => text.push_str(&format!("seed {seed}\n")),
            None => text.push_str("seed -\n"),
        }
        for (path, hash) in &self.inputs {
            text.push_str(&format!("input {hash} {path}\n"));
        }
        for (name, hash) in &self.outputs {
            text.push_str(&format!("output {hash} {name}\n"));
        }
        let path = self.path("manifest.txt");
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
