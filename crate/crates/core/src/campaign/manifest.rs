use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

/// Every file an output directory holds, with content hashes. `complete` is
/// false when a run stopped early; `completed_cells` then says how far it got.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub command: String,
    pub seed: Option<u64>,
    pub complete: bool,
    pub completed_cells: Vec<String>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";
    pub const FORMAT_VERSION: u32 = 1;

    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Manifest {
            format_version: Self::FORMAT_VERSION,
            command: command.to_string(),
            seed,
            complete: false,
            completed_cells: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Hashes `dir/rel` and lists it.
    pub fn add(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let sha256 = sha256_file(&dir.join(rel))?;
        self.files.push(FileEntry { path: rel.to_string(), sha256 });
        Ok(())
    }

    pub fn save(&mut self, dir: &Path) -> Result<()> {
        self.files.sort();
        self.files.dedup();
        let path = dir.join(Self::FILE_NAME);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Rehashes every listed file; returns the paths whose content changed.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            if sha256_file(&dir.join(&f.path))? != f.sha256 {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}
