//! `CMAT` matrix container.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                       |
//! |--------|------|-----------------------------|
//! | 0      | 4    | magic `CMAT`                |
//! | 4      | 4    | version, u32 (= 1)          |
//! | 8      | 8    | rows, u64                   |
//! | 16     | 8    | cols, u64                   |
//! | 24     | 4·rows·cols | binary32 payload, row-major |

use std::fs;
use std::path::Path;

use conceptkd_core::Matrix;

use super::atomic_write;
use crate::error::{Result, StoreError};

pub const MAGIC: [u8; 4] = *b"CMAT";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 24;

/// Serializes a matrix, rounding every entry to binary32.
pub fn encode_matrix(m: &Matrix) -> Result<Vec<u8>, String> {
    if let Some(v) = m.as_slice().iter().find(|v| !(**v as f32).is_finite()) {
        return Err(format!("value {v} is not finite at binary32 precision"));
    }
    let mut out = Vec::with_capacity(HEADER_LEN as usize + 4 * m.as_slice().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<Matrix> {
    let format = |detail: String| StoreError::Format { path: path.into(), detail };
    if bytes.len() < HEADER_LEN as usize {
        return Err(StoreError::Truncated {
            path: path.into(),
            expected: HEADER_LEN,
            actual: bytes.len() as u64,
        });
    }
    if bytes[..4] != MAGIC {
        return Err(format(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| format(format!("header dimensions {rows}x{cols} overflow")))?;
    if expected != bytes.len() as u64 {
        return Err(StoreError::Truncated {
            path: path.into(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let mut data = Vec::with_capacity((rows * cols) as usize);
    for (i, chunk) in bytes[HEADER_LEN as usize..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(StoreError::Data {
                path: path.into(),
                detail: format!("non-finite value at row {}, col {}", i as u64 / cols, i as u64 % cols),
            });
        }
        data.push(f64::from(v));
    }
    Ok(Matrix::from_vec(rows as usize, cols as usize, data)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_matrix(m).map_err(|detail| StoreError::Data { path: path.into(), detail })?;
    atomic_write(path, &bytes)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| StoreError::io(path, e))?;
    decode_matrix(&bytes, path)
}

/// Rounds every entry to the nearest binary32 value, i.e. what a
/// write/read cycle produces.
pub fn round_to_f32(m: &Matrix) -> Matrix {
    let data = m.as_slice().iter().map(|v| f64::from(*v as f32)).collect();
    Matrix::from_vec(m.rows(), m.cols(), data).expect("same shape")
}
