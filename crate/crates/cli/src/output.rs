//! Atomic persistence of run results.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;
use crate::run::RunResult;

/// Run metadata kept apart from the data payload so reruns compare bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub computation: String,
    pub timestamp_unix: f64,
    pub wall_time_seconds: f64,
}

impl Provenance {
    pub fn new(result: &RunResult, started: SystemTime, wall: Duration) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            computation: result.computation.name().to_string(),
            timestamp_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            wall_time_seconds: wall.as_secs_f64(),
        }
    }
}

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Writes `summary.json`, `provenance.json` and one CSV per table, as
/// selected by the config, returning the paths written.
pub fn write_outputs(result: &RunResult, dir: &Path, provenance: &Provenance) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let formats = &result.config.output.formats;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let path = dir.join("summary.json");
        write_atomic(&path, result.summary_json().as_bytes())?;
        written.push(path);
    }
    if formats.contains(&Format::Csv) {
        for t in &result.tables {
            let path = dir.join(format!("{}.csv", t.name));
            write_atomic(&path, t.to_csv().as_bytes())?;
            written.push(path);
        }
    }
    let path = dir.join("provenance.json");
    let mut text = serde_json::to_string_pretty(provenance).expect("provenance serializes");
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    written.push(path);
    Ok(written)
}
