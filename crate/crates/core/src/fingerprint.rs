//! Short content hashes used to tag trained students with the settings that
//! produced them.

use alloc::string::String;
use core::fmt::Write;

use sha2::{Digest, Sha256};

/// First 16 hex digits of the SHA-256 of `text`.
pub fn fingerprint(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(16);
    for b in &digest[..8] {
        let _ = write!(out, "{b:02x}");
    }
    out
}
