//! Per-run manifest: what ran, with which settings, on which inputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config: Value,
    /// Input path to sha256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>, config: Value) -> Self {
        RunManifest {
            tool: "agentprint",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), hash_path(path)?);
        Ok(())
    }

    pub fn save(&mut self, dir: &Path) -> Result<()> {
        self.finished_unix_ms = now_ms();
        self.outputs.sort();
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest JSON");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// sha256 of a file, or of a directory as the sorted list of relative paths
/// and file digests. Manifests inside directories are skipped since their
/// timestamps differ between otherwise identical runs.
pub fn hash_path(path: &Path) -> Result<String> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        return Ok(hex::encode(Sha256::digest(&bytes)));
    }
    let mut entries = Vec::new();
    for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let p = e.path().unwrap_or(path).to_path_buf();
            Error::io(p, e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk failed")))
        })?;
        if !entry.file_type().is_file() || entry.file_name() == MANIFEST_FILE {
            continue;
        }
        let rel = entry.path().strip_prefix(path).unwrap_or(entry.path());
        let bytes = fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
        entries.push(format!("{}\t{}\n", rel.display(), hex::encode(Sha256::digest(&bytes))));
    }
    let mut h = Sha256::new();
    for e in &entries {
        h.update(e.as_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_hash_ignores_manifests_and_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "x").unwrap();
        let h1 = hash_path(dir.path()).unwrap();
        fs::write(dir.path().join(MANIFEST_FILE), "{}").unwrap();
        assert_eq!(hash_path(dir.path()).unwrap(), h1);
        fs::write(dir.path().join("a.txt"), "y").unwrap();
        assert_ne!(hash_path(dir.path()).unwrap(), h1);
    }

    #[test]
    fn file_hash_is_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            hash_path(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
