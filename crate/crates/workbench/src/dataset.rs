//! A validated dataset loaded from a manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use conceptkd_core::concept_space::{map_dataset, ConceptCorpus, SegmentEmbeddings};
use conceptkd_core::distillation::{StudentEnsemble, TeacherLogits};
use conceptkd_core::synthetic::ReferenceSpec;
use conceptkd_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StoreError};
use crate::store::manifest::{
    load_manifest, validate_manifest, CorpusFiles, ImageEntry, Manifest, Splits,
};
use crate::store::matrix::{read_matrix, round_to_f32, write_matrix};
use crate::store::{read_names, write_names};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    #[default]
    Validation,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            other => Err(format!("unknown split '{other}' (expected train or validation)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: Manifest,
    pub corpus: ConceptCorpus,
    pub presence: Matrix,
    pub teacher: TeacherLogits,
    pub labels: Matrix,
    pub train_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
}

impl Dataset {
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        Self::from_manifest(load_manifest(manifest_path)?)
    }

    pub fn from_manifest(manifest: Manifest) -> Result<Self> {
        let report = validate_manifest(&manifest);
        if !report.is_ok() {
            return Err(StoreError::Invalid(report));
        }
        let corpus = load_corpus(&manifest)?;
        let presence = read_matrix(manifest.resolve(&manifest.presence))?;
        let teacher = TeacherLogits::new(
            manifest.classes.clone(),
            read_matrix(manifest.resolve(&manifest.teacher_logits))?,
        )?;
        let labels = read_matrix(manifest.resolve(&manifest.labels))?;
        let row_of = |id: &String| manifest.images.iter().position(|i| &i.id == id).expect("validated");
        let mut train_rows: Vec<usize> = manifest.splits.train.iter().map(row_of).collect();
        let mut validation_rows: Vec<usize> = manifest.splits.validation.iter().map(row_of).collect();
        train_rows.sort_unstable();
        validation_rows.sort_unstable();
        Ok(Dataset { manifest, corpus, presence, teacher, labels, train_rows, validation_rows })
    }

    pub fn rows(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train_rows,
            Split::Validation => &self.validation_rows,
        }
    }

    pub fn class_names(&self) -> &[String] {
        &self.manifest.classes
    }

    pub fn image_id(&self, row: usize) -> &str {
        &self.manifest.images[row].id
    }

    /// Presence rows and teacher logits of one split, for training.
    pub fn training_view(&self, split: Split) -> Result<(Matrix, TeacherLogits)> {
        let rows = self.rows(split);
        let teacher = TeacherLogits::new(self.teacher.class_names.clone(), self.teacher.values.select_rows(rows))?;
        Ok((self.presence.select_rows(rows), teacher))
    }

    /// Labels of class `j` on the given rows.
    pub fn label_column(&self, j: usize, rows: &[usize]) -> Vec<bool> {
        rows.iter().map(|&r| self.labels.get(r, j) > 0.5).collect()
    }

    pub fn teacher_column(&self, j: usize, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&r| self.teacher.values.get(r, j)).collect()
    }

    /// Confirms the ensemble covers exactly the manifest's classes, in order,
    /// over the corpus's concepts.
    pub fn check_ensemble(&self, ensemble: &StudentEnsemble) -> Result<()> {
        let mismatch = |detail: String| StoreError::Schema { path: PathBuf::from("ensemble"), detail };
        if ensemble.class_names != self.manifest.classes {
            return Err(mismatch(format!(
                "ensemble classes {:?} do not match manifest classes {:?}",
                ensemble.class_names, self.manifest.classes
            )));
        }
        for s in &ensemble.students {
            if s.num_concepts() != self.corpus.len() {
                return Err(mismatch(format!(
                    "class '{}' has {} weights, corpus has {} concepts",
                    s.class_name,
                    s.num_concepts(),
                    self.corpus.len()
                )));
            }
        }
        Ok(())
    }
}

pub fn load_corpus(manifest: &Manifest) -> Result<ConceptCorpus> {
    let names = read_names(manifest.resolve(&manifest.corpus.names))?;
    let vectors = read_matrix(manifest.resolve(&manifest.corpus.vectors))?;
    Ok(ConceptCorpus::new(names, vectors)?)
}

pub fn load_segments(manifest: &Manifest) -> Result<Vec<SegmentEmbeddings>> {
    manifest
        .images
        .iter()
        .map(|img| {
            let rows = read_matrix(manifest.resolve(&img.segments))?;
            Ok(SegmentEmbeddings::new(img.id.clone(), rows)?)
        })
        .collect()
}

/// Writes the seeded reference dataset under `dir` and returns the manifest path.
///
/// The stored presence matrix is recomputed from the binary32 corpus and
/// segment files, so mapping the written files reproduces it exactly.
pub fn write_reference(dir: &Path, spec: &ReferenceSpec) -> Result<PathBuf> {
    let data = spec.generate()?;
    let seg_dir = dir.join("segments");
    fs::create_dir_all(&seg_dir).map_err(|e| StoreError::io(&seg_dir, e))?;

    let corpus = ConceptCorpus::new(data.corpus.names().to_vec(), round_to_f32(data.corpus.vectors()))?;
    write_names(dir.join("concepts.txt"), corpus.names())?;
    write_matrix(dir.join("concepts.cmat"), corpus.vectors())?;

    let mut images = Vec::with_capacity(data.segments.len());
    let mut stored = Vec::with_capacity(data.segments.len());
    for seg in &data.segments {
        let rel = PathBuf::from("segments").join(format!("{}.cmat", seg.image_id));
        let rows = round_to_f32(seg.rows());
        write_matrix(dir.join(&rel), &rows)?;
        stored.push(SegmentEmbeddings::new(seg.image_id.clone(), rows)?);
        images.push(ImageEntry { id: seg.image_id.clone(), segments: rel });
    }
    write_matrix(dir.join("presence.cmat"), &map_dataset(&stored, &corpus)?)?;
    write_matrix(dir.join("teacher.cmat"), &data.teacher.values)?;
    write_matrix(dir.join("labels.cmat"), &data.labels)?;

    let manifest = Manifest {
        id: format!("reference-{}", spec.seed),
        classes: spec.class_names.clone(),
        corpus: CorpusFiles { names: "concepts.txt".into(), vectors: "concepts.cmat".into() },
        presence: "presence.cmat".into(),
        teacher_logits: "teacher.cmat".into(),
        labels: "labels.cmat".into(),
        images,
        splits: Splits { train: data.train, validation: data.validation },
        base_dir: dir.into(),
    };
    let path = dir.join("manifest.toml");
    crate::store::atomic_write(&path, manifest.to_toml().as_bytes())?;
    Ok(path)
}
