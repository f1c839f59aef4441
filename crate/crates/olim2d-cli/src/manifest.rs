//! The run manifest: config echo, version, timings, counters, and the
//! produced files with their SHA-256 checksums. Written last, atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Default)]
pub struct RunManifest {
    pub command: String,
    pub wall_time: Duration,
    /// Free-form counters and notes, in insertion order.
    pub stats: Vec<(String, String)>,
    /// Relative file name and checksum of every produced file.
    pub files: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest { command: command.to_string(), ..Default::default() }
    }

    pub fn stat(&mut self, key: &str, value: impl ToString) {
        self.stats.push((key.to_string(), value.to_string()));
    }

    /// Record every regular file currently in `dir` (the manifest itself
    /// excluded) with its checksum.
    pub fn checksum_dir(&mut self, dir: &Path) -> Result<()> {
        let mut names: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::runtime("manifest", e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != MANIFEST_NAME))
            .collect();
        names.sort();
        for path in names {
            let bytes = fs::read(&path).map_err(|e| CliError::runtime("manifest", e))?;
            let digest = hex::encode(Sha256::digest(&bytes));
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            self.files.push((name, digest));
        }
        Ok(())
    }

    /// Serialize and write `dir/manifest.txt` atomically.
    pub fn write(&self, dir: &Path, config: &RunConfig) -> Result<()> {
        let mut out = String::new();
        out.push_str("manifest_version=1\n");
        out.push_str(&format!("code_version={}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("command={}\n", self.command));
        out.push_str(&format!("wall_time_s={}\n", self.wall_time.as_secs_f64()));
        for (k, v) in &self.stats {
            out.push_str(&format!("stat.{k}={v}\n"));
        }
        for (k, v) in config.to_kv().iter() {
            out.push_str(&format!("config.{k}={v}\n"));
        }
        for (i, (name, digest)) in self.files.iter().enumerate() {
            out.push_str(&format!("file.{i}.name={name}\n"));
            out.push_str(&format!("file.{i}.sha256={digest}\n"));
        }
        write_text_atomic(&dir.join(MANIFEST_NAME), &out)
            .map_err(|e| CliError::runtime("manifest", e))
    }
}

/// Write a text file through a temp file in the same directory plus rename,
/// so an interrupted run never leaves a partial file under the final name.
pub fn write_text_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.flush()?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
