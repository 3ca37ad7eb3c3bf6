use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::descriptors::DescriptorId;
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.json";
pub const SPLIT: &str = "split.json";
pub const DATASET: &str = "dataset.json";
pub const WEIGHTS: &str = "weights.json";
pub const FUSE_LOG: &str = "fuse.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

const FORMAT_VERSION: u32 = 1;

pub fn grids_file(d: DescriptorId) -> String {
    format!("grids_{d}.jsonl")
}

pub fn features_file(d: DescriptorId) -> String {
    format!("features_{d}.jsonl")
}

pub fn pca_file(d: DescriptorId) -> String {
    format!("pca_{d}.json")
}

pub fn bank_file(d: DescriptorId) -> String {
    format!("bank_{d}.json")
}

pub fn svm_file(d: DescriptorId) -> String {
    format!("svm_{d}.json")
}

pub fn scores_file(d: DescriptorId) -> String {
    format!("scores_{d}.csv")
}

/// File name to SHA-256 of every artifact in the bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub crate_version: String,
    pub files: BTreeMap<String, String>,
}

/// A model bundle directory.
#[derive(Debug, Clone)]
pub struct Bundle {
    root: PathBuf,
}

impl Bundle {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn open(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::MissingArtifact(root.to_path_buf()));
        }
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    pub fn read_bytes(&self, name: &str) -> Result<Vec<u8>> {
        let path = self.path(name);
        if !path.is_file() {
            return Err(Error::MissingArtifact(path));
        }
        fs::read(&path).map_err(|e| Error::io(path, e))
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let bytes = self.read_bytes(name)?;
        serde_json::from_slice(&bytes).map_err(|e| Error::json(self.path(name), e))
    }

    pub fn read_jsonl<T: DeserializeOwned>(&self, name: &str) -> Result<Vec<T>> {
        let path = self.path(name);
        if !path.is_file() {
            return Err(Error::MissingArtifact(path));
        }
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| Error::json(&path, e))?);
        }
        Ok(out)
    }

    /// Writes all files, or none: anything already written is removed on failure.
    pub fn write_all(&self, files: Vec<(String, Vec<u8>)>) -> Result<()> {
        let mut written = Vec::new();
        for (name, bytes) in files {
            let path = self.path(&name);
            if let Err(e) = fs::write(&path, bytes) {
                for done in &written {
                    let _ = fs::remove_file(done);
                }
                let _ = fs::remove_file(&path);
                return Err(Error::io(path, e));
            }
            written.push(path);
        }
        self.update_manifest()
    }

    /// Deletes stage outputs by name; missing files are fine.
    pub fn remove(&self, names: &[String]) -> Result<()> {
        for name in names {
            let path = self.path(name);
            match fs::remove_file(&path) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(Error::io(path, e)),
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let mut files = BTreeMap::new();
        let entries = fs::read_dir(&self.root).map_err(|e| Error::io(&self.root, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name == MANIFEST || !entry.path().is_file() {
                continue;
            }
            let bytes = fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
            files.insert(name, hex::encode(Sha256::digest(&bytes)));
        }
        Ok(Manifest {
            format_version: FORMAT_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            files,
        })
    }

    pub fn update_manifest(&self) -> Result<()> {
        let bytes = json_bytes(&self.manifest()?)?;
        let path = self.path(MANIFEST);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Names of files whose contents no longer match the stored manifest.
    pub fn verify(&self) -> Result<Vec<String>> {
        let stored: Manifest = self.read_json(MANIFEST)?;
        let current = self.manifest()?;
        let mut bad: Vec<String> = stored
            .files
            .iter()
            .filter(|(name, hash)| current.files.get(*name) != Some(hash))
            .map(|(name, _)| name.clone())
            .collect();
        bad.extend(current.files.keys().filter(|n| !stored.files.contains_key(*n)).cloned());
        Ok(bad)
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn jsonl_bytes<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    for r in records {
        serde_json::to_writer(&mut bytes, r).map_err(|e| Error::Format(e.to_string()))?;
        bytes.push(b'\n');
    }
    Ok(bytes)
}
