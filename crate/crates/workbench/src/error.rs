use std::io;
use std::path::PathBuf;

use crate::store::manifest::ValidationReport;

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {error}", path.display())]
    Io { path: PathBuf, error: io::Error },
    #[error("{}: format error: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
    #[error("{}: truncated: header implies {expected} bytes, file has {actual}", path.display())]
    Truncated { path: PathBuf, expected: u64, actual: u64 },
    #[error("{}: data error: {detail}", path.display())]
    Data { path: PathBuf, detail: String },
    #[error("{}: schema error: {detail}", path.display())]
    Schema { path: PathBuf, detail: String },
    #[error("{}: schema version {found} is not supported (expected {expected}); migrate the document", path.display())]
    Migration { path: PathBuf, found: u32, expected: u32 },
    #[error("invalid manifest: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Core(#[from] conceptkd_core::Error),
}

impl StoreError {
    pub(crate) fn io(path: impl Into<PathBuf>, error: io::Error) -> Self {
        StoreError::Io { path: path.into(), error }
    }
}
