#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use conceptkd::dataset::write_reference;
use conceptkd_core::synthetic::ReferenceSpec;

/// Writes the default reference dataset into `dir` and returns its manifest.
pub fn reference(dir: &Path) -> PathBuf {
    write_reference(dir, &ReferenceSpec::default()).unwrap()
}

pub fn conceptkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conceptkd")).args(args).output().unwrap()
}

/// Runs the binary and returns stdout, panicking with stderr on failure.
pub fn conceptkd_ok(args: &[&str]) -> String {
    let out = conceptkd(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
