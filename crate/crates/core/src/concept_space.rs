//! Concept corpus, segment labeling, and concept-presence mapping.
//!
//! An image is represented by the embeddings of its segments. Its presence
//! vector holds, for every concept, the best cosine similarity between that
//! concept and any segment, clamped below at zero.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{dot, sqrt};
use crate::matrix::Matrix;

/// Named concept vectors spanning the interpretable space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptCorpus {
    names: Vec<String>,
    vectors: Matrix,
    #[serde(skip)]
    sq_norms: Vec<f64>,
}

impl ConceptCorpus {
    pub fn new(names: Vec<String>, vectors: Matrix) -> Result<Self> {
        if names.len() != vectors.rows() {
            return Err(Error::dim("concept corpus rows", names.len(), vectors.rows()));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::Ingestion("empty concept name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Ingestion(format!("duplicate concept name '{name}'")));
            }
        }
        let sq_norms = squared_norms(&vectors, "concept vector")?;
        Ok(ConceptCorpus {
            names,
            vectors,
            sq_norms,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn sq_norm(&self, i: usize) -> f64 {
        // Deserialized corpora skip the cache.
        self.sq_norms.get(i).copied().unwrap_or_else(|| {
            let r = self.vectors.row(i);
            dot(r, r)
        })
    }
}

/// Embeddings of one image's segments, one row per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEmbeddings {
    pub image_id: String,
    rows: Matrix,
    sq_norms: Vec<f64>,
}

impl SegmentEmbeddings {
    pub fn new(image_id: impl Into<String>, rows: Matrix) -> Result<Self> {
        let image_id = image_id.into();
        if rows.rows() == 0 {
            return Err(Error::Domain(format!("image '{image_id}' has no segments")));
        }
        let sq_norms = squared_norms(&rows, "segment embedding")?;
        Ok(SegmentEmbeddings {
            image_id,
            rows,
            sq_norms,
        })
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.rows() == 0
    }
}

fn squared_norms(m: &Matrix, what: &str) -> Result<Vec<f64>> {
    m.iter_rows()
        .enumerate()
        .map(|(i, r)| {
            let n = dot(r, r);
            if n > 0.0 && n.is_finite() {
                Ok(n)
            } else {
                Err(Error::Domain(format!("{what} {i} has non-positive or non-finite norm")))
            }
        })
        .collect()
}

/// Per-image concept presences, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresenceVector {
    pub values: Vec<f64>,
}

/// One segment's concept label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub segment: usize,
    pub concept: usize,
    pub similarity: f64,
}

/// Cosine similarity of two nonzero vectors of equal length.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim("cosine operands", a.len(), b.len()));
    }
    let (na2, nb2) = (dot(a, a), dot(b, b));
    if na2 == 0.0 || nb2 == 0.0 {
        return Err(Error::Domain("cosine of a zero-norm vector".into()));
    }
    Ok(scaled_cosine(dot(a, b), na2, nb2))
}

/// `dot / sqrt(|a|² |b|²)`, which is exactly 1 for identical vectors.
fn scaled_cosine(dot: f64, a_sq: f64, b_sq: f64) -> f64 {
    (dot / sqrt(a_sq * b_sq)).clamp(-1.0, 1.0)
}

fn check_dim(seg: &SegmentEmbeddings, corpus: &ConceptCorpus) -> Result<()> {
    if seg.rows.cols() != corpus.dim() {
        return Err(Error::dim("segment embedding dim", corpus.dim(), seg.rows.cols()));
    }
    Ok(())
}

/// Similarity between segment `s` and concept `c`, using cached norms.
fn similarity(seg: &SegmentEmbeddings, s: usize, corpus: &ConceptCorpus, c: usize) -> f64 {
    let d = dot(seg.rows.row(s), corpus.vectors.row(c));
    scaled_cosine(d, seg.sq_norms[s], corpus.sq_norm(c))
}

/// Assigns each segment the concept with the highest cosine similarity.
/// Ties go to the lowest concept index.
pub fn label_segments(seg: &SegmentEmbeddings, corpus: &ConceptCorpus) -> Result<Vec<SegmentLabel>> {
    check_dim(seg, corpus)?;
    if corpus.is_empty() {
        return Err(Error::Domain("empty concept corpus".into()));
    }
    let labels = (0..seg.len())
        .map(|s| {
            let mut best = SegmentLabel {
                segment: s,
                concept: 0,
                similarity: similarity(seg, s, corpus, 0),
            };
            for c in 1..corpus.len() {
                let sim = similarity(seg, s, corpus, c);
                if sim > best.similarity {
                    best.concept = c;
                    best.similarity = sim;
                }
            }
            best
        })
        .collect();
    Ok(labels)
}

/// Presence of every corpus concept in one image.
pub fn map_image(seg: &SegmentEmbeddings, corpus: &ConceptCorpus) -> Result<PresenceVector> {
    check_dim(seg, corpus)?;
    if seg.is_empty() {
        return Err(Error::Domain(format!("image '{}' has no segments", seg.image_id)));
    }
    let values = (0..corpus.len())
        .map(|c| {
            (0..seg.len())
                .map(|s| similarity(seg, s, corpus, c))
                .fold(0.0_f64, f64::max)
        })
        .collect();
    Ok(PresenceVector { values })
}

/// Presence matrix for a list of images, one row per image in input order.
pub fn map_dataset(all_segments: &[SegmentEmbeddings], corpus: &ConceptCorpus) -> Result<Matrix> {
    let mut seen = BTreeSet::new();
    for seg in all_segments {
        if !seen.insert(seg.image_id.as_str()) {
            return Err(Error::Ingestion(format!("duplicate image id '{}'", seg.image_id)));
        }
        check_dim(seg, corpus)?;
    }
    let mut out = Matrix::zeros(all_segments.len(), corpus.len());
    for (i, seg) in all_segments.iter().enumerate() {
        let p = map_image(seg, corpus)?;
        out.row_mut(i).copy_from_slice(&p.values);
    }
    Ok(out)
}
