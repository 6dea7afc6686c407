//! Run manifests and atomic artifact writes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_time_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.into(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_secs: 0.0,
        }
    }

    /// Stamps the elapsed time and writes `<artifact>.manifest.json` for the
    /// first output, or `run_manifest.json` inside `dir` when given.
    pub fn finish(mut self, started: Instant, dir: Option<&Path>) -> Result<PathBuf, CliError> {
        self.wall_time_secs = started.elapsed().as_secs_f64();
        let path = match (dir, self.outputs.first()) {
            (Some(d), _) => d.join("run_manifest.json"),
            (None, Some(out)) => PathBuf::from(format!("{out}.manifest.json")),
            (None, None) => return Err(CliError::Internal("manifest without outputs".into())),
        };
        let mut text =
            serde_json::to_string_pretty(&self).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
