//! Output directory handling and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::run::Artifact;

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub mode: &'a str,
    pub outputs: Vec<&'static str>,
    pub timestamp: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes every artifact to a temporary name first and renames only after all
/// writes succeeded, so a failed run leaves no partial outputs behind.
pub fn commit(dir: &Path, artifacts: &[Artifact]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    for artifact in artifacts {
        let target = dir.join(artifact.name);
        let tmp = dir.join(format!(".{}.tmp", artifact.name));
        if let Err(e) = fs::write(&tmp, &artifact.bytes) {
            let _ = fs::remove_file(&tmp);
            for (tmp, _) in &staged {
                let _ = fs::remove_file(tmp);
            }
            return Err(e);
        }
        staged.push((tmp, target));
    }
    for (tmp, target) in &staged {
        fs::rename(tmp, target)?;
    }
    Ok(())
}
