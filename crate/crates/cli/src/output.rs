//! Atomic output files and metadata sidecars.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Writes `bytes` to a sibling temporary file and renames it into place, so a
/// failed run never leaves a truncated file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let name = path
        .file_name()
        .with_context(|| format!("{} is not a file path", path.display()))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

/// SHA-256 over the canonical (key-sorted) JSON of the resolved config.
pub fn digest(config: &Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

pub fn short_digest(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

/// Where a command's primary output goes.
pub struct Sink {
    pub command: &'static str,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub config: Value,
}

impl Sink {
    pub fn metadata(&self, extra: Map<String, Value>) -> Value {
        let mut meta = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config_digest": digest(&self.config),
            "config": self.config,
        });
        meta.as_object_mut().expect("object").extend(extra);
        meta
    }

    /// Emits the data and its metadata. Without `--out` the data goes to
    /// stdout and the metadata to stderr.
    pub fn emit(&self, data: &[u8], extra: Map<String, Value>) -> anyhow::Result<()> {
        let meta = serde_json::to_string_pretty(&self.metadata(extra))?;
        match &self.out {
            Some(path) => {
                write_atomic(path, data)?;
                write_atomic(&sidecar_path(path, ".meta.json"), meta.as_bytes())?;
                eprintln!("wrote {}", path.display());
            }
            None => {
                io::stdout().write_all(data)?;
                eprintln!("{meta}");
            }
        }
        Ok(())
    }
}
