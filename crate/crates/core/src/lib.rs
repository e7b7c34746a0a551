//! Concept-space knowledge distillation.
//!
//! A teacher classifier's per-class logits are distilled into single-layer
//! linear students whose inputs are concept-presence vectors. Students can then
//! be fine-tuned under per-concept weight bounds derived from uptune/downtune
//! instructions, and evaluated with the metrics an inspection UI needs.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! HTTP service live in the `conceptkd` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod adam;
pub mod analytics;
pub mod concept_space;
pub mod distillation;
mod error;
pub mod fingerprint;
mod math;
mod matrix;
pub mod synthetic;
pub mod tsne;
pub mod tuning;

pub use adam::Adam;
pub use error::{Error, Result};
pub use matrix::Matrix;
