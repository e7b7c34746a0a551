//! Append-only provenance log, one JSON entry per line.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use conceptkd_core::tuning::ProvenanceEntry;

use crate::error::{Result, StoreError};

/// The log that accompanies an ensemble document: `ensemble.json` pairs with
/// `ensemble.provenance.ndjson`.
pub fn provenance_path(ensemble_path: &Path) -> PathBuf {
    ensemble_path.with_extension("provenance.ndjson")
}

pub fn append_entry(path: &Path, entry: &ProvenanceEntry) -> Result<()> {
    let mut line = serde_json::to_string(entry).expect("provenance entries serialize");
    line.push('\n');
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| StoreError::io(path, e))?;
    file.write_all(line.as_bytes()).map_err(|e| StoreError::io(path, e))?;
    file.sync_data().map_err(|e| StoreError::io(path, e))
}

/// All complete entries in the log. A missing log is empty; a torn final line
/// left by an interrupted append is ignored.
pub fn read_entries(path: &Path) -> Result<Vec<ProvenanceEntry>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StoreError::io(path, e)),
    };
    let complete = match text.rfind('\n') {
        Some(end) => &text[..end],
        None => "",
    };
    complete
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StoreError::Format {
                path: path.into(),
                detail: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}
