//! Artifact manifest: every file a run writes, with its size, SHA-256 and
//! the parameters that produced it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
    /// Which step produced the file.
    pub stage: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects artifacts as they are written below one output directory.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    manifest: Manifest,
}

impl ArtifactWriter {
    pub fn create(root: impl Into<PathBuf>, command: &str) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            manifest: Manifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                artifacts: Vec::new(),
            },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `bytes` to `name` and records it.
    pub fn write(&mut self, name: &str, bytes: &[u8], stage: &str, params: BTreeMap<String, String>) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes)?;
        self.record(name, stage, params)?;
        Ok(path)
    }

    /// Records a file some other writer already produced under `name`.
    pub fn record(&mut self, name: &str, stage: &str, params: BTreeMap<String, String>) -> Result<()> {
        let bytes = fs::read(self.path(name))?;
        self.manifest.artifacts.retain(|a| a.path != name);
        self.manifest.artifacts.push(ArtifactEntry {
            path: name.into(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
            stage: stage.into(),
            params,
        });
        Ok(())
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Writes `manifest.json`. The manifest does not list itself.
    pub fn finish(self) -> Result<Manifest> {
        let text = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Config(format!("manifest: {e}")))?;
        fs::write(self.root.join(MANIFEST_FILE), text + "\n")?;
        Ok(self.manifest)
    }
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })
    }

    /// Entries whose file is missing or no longer matches its checksum.
    pub fn verify(&self, root: impl AsRef<Path>) -> Vec<String> {
        let root = root.as_ref();
        self.artifacts
            .iter()
            .filter(|a| match fs::read(root.join(&a.path)) {
                Ok(b) => b.len() as u64 != a.bytes || sha256_hex(&b) != a.sha256,
                Err(_) => true,
            })
            .map(|a| a.path.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn records_and_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::create(dir.path(), "test").unwrap();
        w.write("a.csv", b"1,2\n", "forward", BTreeMap::new()).unwrap();
        w.write("a.csv", b"3,4\n", "forward", BTreeMap::new()).unwrap();
        w.write("b.txt", b"x", "noise", BTreeMap::from([("delta".into(), "0.05".into())]))
            .unwrap();
        let m = w.finish().unwrap();
        assert_eq!(m.artifacts.len(), 2);
        let back = Manifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, m);
        assert!(back.verify(dir.path()).is_empty());
        fs::write(dir.path().join("b.txt"), b"y").unwrap();
        assert_eq!(back.verify(dir.path()), vec!["b.txt".to_string()]);
    }
}
