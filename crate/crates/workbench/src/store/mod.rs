//! On-disk formats: `CMAT` matrices, concept name lists, dataset manifests,
//! ensemble documents and provenance logs.

pub mod ensemble;
pub mod manifest;
pub mod matrix;
pub mod provenance;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Result, StoreError};

/// Writes `bytes` to a temporary file next to `path` and renames it into place,
/// so readers see either the old or the new content.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| StoreError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| StoreError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| StoreError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| StoreError::io(path, e.error))?;
    Ok(())
}

/// Reads a newline-separated list of concept names.
pub fn read_names(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    Ok(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
}

pub fn write_names(path: impl AsRef<Path>, names: &[String]) -> Result<()> {
    let mut text = names.join("\n");
    text.push('\n');
    atomic_write(path.as_ref(), text.as_bytes())
}
