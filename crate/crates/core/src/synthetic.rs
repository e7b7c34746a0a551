//! Seeded synthetic datasets for tests, demos and the reference manifest.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::concept_space::{map_dataset, ConceptCorpus, SegmentEmbeddings};
use crate::distillation::{train_student, StudentEnsemble, TeacherLogits, TrainConfig};
use crate::error::Result;
use crate::math::{dot, gaussian};
use crate::matrix::Matrix;

/// Presence data with a sparse linear teacher `y = w*·x` per class.
///
/// Active concepts come in pairs carrying `+a` and `-a`, so with i.i.d.
/// uniform presences the teacher logit has zero mean and a bias-free student
/// can represent it. Rows where any class logit falls inside `(-margin,
/// margin)` are redrawn, which mimics a confident teacher whose logits rarely
/// sit at the decision boundary.
#[derive(Debug, Clone)]
pub struct PlantedTask {
    pub instances: usize,
    pub concepts: usize,
    pub classes: usize,
    /// Active concept pairs per class.
    pub active_pairs: usize,
    pub weight_scale: f64,
    pub margin: f64,
    /// Standard deviation of the noise added to teacher logits to form labels.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for PlantedTask {
    fn default() -> Self {
        PlantedTask {
            instances: 10_582,
            concepts: 584,
            classes: 20,
            active_pairs: 5,
            weight_scale: 15.0,
            margin: 3.0,
            label_noise: 4.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedData {
    pub presence: Matrix,
    pub teacher: TeacherLogits,
    /// N×k matrix of {0, 1} labels.
    pub labels: Matrix,
    /// Planted weight vectors, one per class.
    pub planted: Vec<Vec<f64>>,
}

impl PlantedTask {
    pub fn generate(&self) -> Result<PlantedData> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (n, c, k) = (self.instances, self.concepts, self.classes);
        let planted: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let mut w = vec![0.0; c];
                let picks = sample(&mut rng, c, (2 * self.active_pairs).min(c)).into_vec();
                for pair in picks.chunks(2) {
                    let magnitude = self.weight_scale * (0.75 + 0.5 * rng.random::<f64>());
                    w[pair[0]] = magnitude;
                    if let Some(&neg) = pair.get(1) {
                        w[neg] = -magnitude;
                    }
                }
                w
            })
            .collect();

        let mut presence = Matrix::zeros(n, c);
        let mut teacher = Matrix::zeros(n, k);
        let mut logits = vec![0.0; k];
        for i in 0..n {
            loop {
                for v in presence.row_mut(i) {
                    *v = rng.random::<f64>();
                }
                for (y, w) in logits.iter_mut().zip(&planted) {
                    *y = dot(w, presence.row(i));
                }
                if logits.iter().all(|y| y.abs() >= self.margin) {
                    break;
                }
            }
            teacher.row_mut(i).copy_from_slice(&logits);
        }
        let mut labels = Matrix::zeros(n, k);
        for i in 0..n {
            for j in 0..k {
                let noisy = teacher.get(i, j) + self.label_noise * gaussian(&mut rng);
                labels.set(i, j, if noisy > 0.0 { 1.0 } else { 0.0 });
            }
        }
        let names = (0..k).map(|j| format!("class{j:02}")).collect();
        Ok(PlantedData {
            presence,
            teacher: TeacherLogits::new(names, teacher)?,
            labels,
            planted,
        })
    }
}

/// Small end-to-end dataset: corpus, per-image segments, presences, teacher
/// logits, labels and a train/validation split.
#[derive(Debug, Clone)]
pub struct ReferenceDataset {
    pub corpus: ConceptCorpus,
    pub segments: Vec<SegmentEmbeddings>,
    pub presence: Matrix,
    pub teacher: TeacherLogits,
    pub labels: Matrix,
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ReferenceSpec {
    pub instances: usize,
    pub concepts: usize,
    pub dim: usize,
    pub class_names: Vec<String>,
    pub seed: u64,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec {
            instances: 100,
            concepts: 16,
            dim: 8,
            class_names: vec!["bicycle".into(), "sofa".into(), "tvmonitor".into()],
            seed: 42,
        }
    }
}

impl ReferenceSpec {
    pub fn generate(&self) -> Result<ReferenceDataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (n, c, d, k) = (self.instances, self.concepts, self.dim, self.class_names.len());

        let mut vectors = Matrix::zeros(c, d);
        for i in 0..c {
            for v in vectors.row_mut(i) {
                *v = gaussian(&mut rng);
            }
        }
        let names = (0..c).map(|i| format!("concept{i:02}")).collect();
        let corpus = ConceptCorpus::new(names, vectors)?;

        let mut segments = Vec::with_capacity(n);
        for i in 0..n {
            let s = rng.random_range(2..=4);
            let mut rows = Matrix::zeros(s, d);
            for r in 0..s {
                let concept = rng.random_range(0..c);
                let scale = 0.5 + rng.random::<f64>();
                for (t, v) in rows.row_mut(r).iter_mut().enumerate() {
                    *v = scale * corpus.vectors().get(concept, t) + 0.4 * gaussian(&mut rng);
                }
            }
            segments.push(SegmentEmbeddings::new(format!("img{i:04}"), rows)?);
        }
        let presence = map_dataset(&segments, &corpus)?;

        let mut mean = vec![0.0; c];
        for row in presence.iter_rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x / n as f64;
            }
        }
        let mut teacher = Matrix::zeros(n, k);
        let mut labels = Matrix::zeros(n, k);
        for j in 0..k {
            let mut w = vec![0.0; c];
            for idx in sample(&mut rng, c, 3.min(c)).iter() {
                w[idx] = 8.0 * (rng.random::<f64>() - 0.3);
            }
            let offset = -0.4 * j as f64;
            for i in 0..n {
                let y: f64 = presence
                    .row(i)
                    .iter()
                    .zip(&mean)
                    .zip(&w)
                    .map(|((x, m), w)| w * (x - m))
                    .sum::<f64>()
                    + offset;
                teacher.set(i, j, y);
            }
            for i in 0..n {
                let noisy = teacher.get(i, j) + 0.8 * gaussian(&mut rng);
                labels.set(i, j, if noisy > 0.0 { 1.0 } else { 0.0 });
            }
        }

        let (mut train, mut validation) = (Vec::new(), Vec::new());
        for (i, seg) in segments.iter().enumerate() {
            if i % 10 < 7 {
                train.push(seg.image_id.clone());
            } else {
                validation.push(seg.image_id.clone());
            }
        }
        Ok(ReferenceDataset {
            corpus,
            segments,
            presence,
            teacher: TeacherLogits::new(self.class_names.clone(), teacher)?,
            labels,
            train,
            validation,
        })
    }
}

/// A trained single-class student whose most important concept has been
/// zeroed after training, leaving it under-using that concept.
#[derive(Debug, Clone)]
pub struct SuppressedConcept {
    pub presence: Matrix,
    /// N×1 teacher logits.
    pub teacher: Matrix,
    /// N×1 labels.
    pub labels: Matrix,
    pub train_rows: Vec<usize>,
    pub eval_rows: Vec<usize>,
    pub ensemble: StudentEnsemble,
    /// The zeroed concept.
    pub concept: usize,
}

/// Teacher `y = 12·x₀ − 6·x₁ − 6·x₂` over uniform presences of 32 concepts,
/// labels from the teacher plus unit noise, a 70/30 split, and a student
/// trained with default settings whose weight on concept 0 is then zeroed.
pub fn suppressed_concept_scenario(seed: u64) -> Result<SuppressedConcept> {
    let (n, c) = (6000, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut presence = Matrix::zeros(n, c);
    let mut teacher = Matrix::zeros(n, 1);
    let mut labels = Matrix::zeros(n, 1);
    for i in 0..n {
        for v in presence.row_mut(i) {
            *v = rng.random::<f64>();
        }
        let r = presence.row(i);
        let y = 12.0 * r[0] - 6.0 * r[1] - 6.0 * r[2];
        teacher.set(i, 0, y);
        labels.set(i, 0, if y + gaussian(&mut rng) > 0.0 { 1.0 } else { 0.0 });
    }
    let train_rows: Vec<usize> = (0..n).filter(|i| i % 10 < 7).collect();
    let eval_rows: Vec<usize> = (0..n).filter(|i| i % 10 >= 7).collect();
    let config = TrainConfig {
        seed,
        ..Default::default()
    };
    let train_presence = presence.select_rows(&train_rows);
    let train_teacher: Vec<f64> = train_rows.iter().map(|&r| teacher.get(r, 0)).collect();
    let mut student = train_student(&train_presence, &train_teacher, &config, "target")?;
    student.weights[0] = 0.0;
    Ok(SuppressedConcept {
        presence,
        teacher,
        labels,
        train_rows,
        eval_rows,
        ensemble: StudentEnsemble::new(vec![student])?,
        concept: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_pairs_cancel() {
        let task = PlantedTask {
            instances: 10,
            concepts: 30,
            classes: 2,
            ..Default::default()
        };
        let data = task.generate().unwrap();
        for w in &data.planted {
            assert_eq!(w.iter().filter(|v| **v != 0.0).count(), 10);
            assert!(w.iter().sum::<f64>().abs() < 1e-12);
        }
        assert_eq!(data.presence.rows(), 10);
        assert_eq!(data.teacher.values.cols(), 2);
    }

    #[test]
    fn reference_is_deterministic() {
        let a = ReferenceSpec::default().generate().unwrap();
        let b = ReferenceSpec::default().generate().unwrap();
        assert_eq!(a.presence, b.presence);
        assert_eq!(a.teacher, b.teacher);
        assert_eq!(a.train.len() + a.validation.len(), 100);
        for j in 0..3 {
            let pos: f64 = a.labels.column(j).iter().sum();
            assert!(pos > 5.0, "class {j} has {pos} positives");
        }
    }
}
