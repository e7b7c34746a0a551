//! JSON ensemble documents.
//!
//! Weights are written as shortest round-trip decimals, so loading a saved
//! document reproduces every binary64 weight exactly.

use std::fs;
use std::path::Path;

use conceptkd_core::distillation::{NormStats, StudentEnsemble, StudentModel};
use conceptkd_core::tuning::TuningInstruction;
use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::error::{Result, StoreError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDocument {
    pub schema_version: u32,
    /// Corpus size every weight array must match.
    pub concepts: usize,
    /// Informational; recomputed on load.
    pub fingerprint: String,
    pub classes: Vec<ClassDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDocument {
    pub name: String,
    pub weights: Vec<f64>,
    pub norm: Option<NormStats>,
    pub trained_at: Option<u64>,
    pub config_fingerprint: String,
    pub history: Vec<TuningInstruction>,
}

impl EnsembleDocument {
    pub fn from_ensemble(ensemble: &StudentEnsemble) -> Self {
        let classes = ensemble
            .students
            .iter()
            .zip(&ensemble.histories)
            .map(|(s, h)| ClassDocument {
                name: s.class_name.clone(),
                weights: s.weights.clone(),
                norm: s.norm.clone(),
                trained_at: s.trained_at,
                config_fingerprint: s.config_fingerprint.clone(),
                history: h.clone(),
            })
            .collect();
        EnsembleDocument {
            schema_version: SCHEMA_VERSION,
            concepts: ensemble.students.first().map_or(0, |s| s.num_concepts()),
            fingerprint: ensemble.fingerprint(),
            classes,
        }
    }

    pub fn into_ensemble(self, path: &Path) -> Result<StudentEnsemble> {
        let schema = |detail: String| StoreError::Schema { path: path.into(), detail };
        let c = self.concepts;
        let mut students = Vec::with_capacity(self.classes.len());
        let mut histories = Vec::with_capacity(self.classes.len());
        for class in self.classes {
            let name = &class.name;
            if class.weights.len() != c {
                return Err(schema(format!(
                    "class '{name}' has {} weights, expected {c}",
                    class.weights.len()
                )));
            }
            if let Some(norm) = &class.norm {
                if norm.mean.len() != c || norm.std.len() != c {
                    return Err(schema(format!("class '{name}' has normalization statistics of the wrong length")));
                }
            }
            if let Some(ins) = class.history.iter().find(|i| i.concept_index >= c) {
                return Err(schema(format!(
                    "class '{name}' history references concept {} of {c}",
                    ins.concept_index
                )));
            }
            histories.push(class.history);
            students.push(StudentModel {
                class_name: class.name,
                weights: class.weights,
                norm: class.norm,
                trained_at: class.trained_at,
                config_fingerprint: class.config_fingerprint,
            });
        }
        let mut ensemble = StudentEnsemble::new(students).map_err(|e| schema(e.to_string()))?;
        ensemble.histories = histories;
        Ok(ensemble)
    }
}

pub fn encode_ensemble(ensemble: &StudentEnsemble) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&EnsembleDocument::from_ensemble(ensemble)).expect("ensemble serializes");
    bytes.push(b'\n');
    bytes
}

pub fn save_ensemble(path: impl AsRef<Path>, ensemble: &StudentEnsemble) -> Result<()> {
    atomic_write(path.as_ref(), &encode_ensemble(ensemble))
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<StudentEnsemble> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    let format = |e: serde_json::Error| StoreError::Format { path: path.into(), detail: e.to_string() };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(format)?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| StoreError::Schema { path: path.into(), detail: "missing schema_version".into() })?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(StoreError::Migration {
            path: path.into(),
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    let doc: EnsembleDocument =
        serde_json::from_value(value).map_err(|e| StoreError::Schema { path: path.into(), detail: e.to_string() })?;
    doc.into_ensemble(path)
}
