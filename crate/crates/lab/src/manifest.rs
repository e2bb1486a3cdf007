//! Run directories and their manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub config_hash: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Every file in the directory except the manifest itself, sorted by path.
    pub files: Vec<Artifact>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Prepares an output directory: created if missing, must be empty unless
/// `overwrite`, in which case its contents are removed.
pub fn prepare_dir(dir: &Path, overwrite: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(LabError::config(format!("{} exists and is not a directory", dir.display())));
        }
        let mut entries = fs::read_dir(dir).map_err(|e| LabError::io(dir, e))?.peekable();
        if entries.peek().is_some() {
            if !overwrite {
                return Err(LabError::config(format!(
                    "output directory {} is not empty (pass --overwrite to replace it)",
                    dir.display()
                )));
            }
            fs::remove_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        }
    }
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| LabError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| LabError::io(path, e))
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| LabError::io(dir, e))? {
        let path = entry.map_err(|e| LabError::io(dir, e))?.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else if path != root.join(MANIFEST_FILE) {
            out.push(path);
        }
    }
    Ok(())
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Checksums every file under `root` (except the manifest).
pub fn scan(root: &Path) -> Result<Vec<Artifact>> {
    let mut paths = Vec::new();
    collect(root, root, &mut paths)?;
    let mut files = paths
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| LabError::io(p, e))?;
            Ok(Artifact {
                path: relative(root, p),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(files)
}

impl RunManifest {
    pub fn write(&self, root: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(LabError::compute)?;
        write_file(&root.join(MANIFEST_FILE), text + "\n")
    }

    pub fn read(root: &Path) -> Result<RunManifest> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| LabError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| LabError::config(format!("{}: {e}", path.display())))
    }

    /// Paths whose checksum no longer matches, plus files missing from the
    /// manifest.
    pub fn verify(&self, root: &Path) -> Result<Vec<String>> {
        let current = scan(root)?;
        let mut bad = Vec::new();
        for f in &current {
            match self.files.iter().find(|m| m.path == f.path) {
                Some(m) if m == f => {}
                _ => bad.push(f.path.clone()),
            }
        }
        for m in &self.files {
            if !current.iter().any(|f| f.path == m.path) {
                bad.push(m.path.clone());
            }
        }
        Ok(bad)
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
    fn scan_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        write_file(&dir.path().join("a.csv"), "x\n1\n").unwrap();
        write_file(&dir.path().join("sub/b.svg"), "<svg/>").unwrap();
        let files = scan(dir.path()).unwrap();
        assert_eq!(files.iter().map(|f| f.path.as_str()).collect::<Vec<_>>(), ["a.csv", "sub/b.svg"]);
        let m = RunManifest {
            tool: "critfuse".into(),
            version: "0".into(),
            kind: "test".into(),
            config_hash: String::new(),
            started_unix_ms: 0,
            finished_unix_ms: 0,
            status: Status::Ok,
            error: None,
            files,
        };
        m.write(dir.path()).unwrap();
        assert!(m.verify(dir.path()).unwrap().is_empty());
        write_file(&dir.path().join("a.csv"), "x\n2\n").unwrap();
        write_file(&dir.path().join("extra.txt"), "?").unwrap();
        assert_eq!(m.verify(dir.path()).unwrap(), ["a.csv", "extra.txt"]);
        assert_eq!(RunManifest::read(dir.path()).unwrap(), m);
    }

    #[test]
    fn non_empty_dir_needs_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        write_file(&dir.path().join("old"), "1").unwrap();
        assert!(matches!(prepare_dir(dir.path(), false), Err(LabError::Config(_))));
        prepare_dir(dir.path(), true).unwrap();
        assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
    }
}
