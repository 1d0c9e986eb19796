//! Output directory with atomic writes and a manifest of what was written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes `rel` via a temporary sibling and a rename.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        let tmp = path.with_extension(format!(
            "{}.tmp",
            path.extension().and_then(|e| e.to_str()).unwrap_or("")
        ));
        {
            let mut f = fs::File::create(&tmp)
                .with_context(|| format!("cannot write {}", tmp.display()))?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path).with_context(|| format!("cannot rename to {}", path.display()))?;
        let sha256 = Sha256::digest(bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        self.written.retain(|e| e.path != rel);
        self.written.push(ManifestEntry {
            path: rel.to_string(),
            bytes: bytes.len(),
            sha256,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    /// Files written so far, in write order.
    pub fn files(&self) -> Vec<String> {
        self.written.iter().map(|e| e.path.clone()).collect()
    }

    /// Writes `manifest.json`, which lists every other file written.
    pub fn finish(mut self, config_hash: &str) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            config_hash: &'a str,
            files: &'a [ManifestEntry],
        }
        let mut entries = self.written.clone();
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            config_hash,
            files: &entries,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(self.root.join("manifest.json"))
    }
}

/// File-name slug: lowercase ASCII alphanumerics, everything else `-`.
pub fn slug(name: &str) -> String {
    let mut s = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_ascii_alphanumeric() || c == '.' {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('-') {
            s.push('-');
        }
    }
    s.trim_matches('-').to_string()
}
