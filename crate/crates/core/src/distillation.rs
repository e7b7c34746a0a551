//! Response-based distillation of teacher logits into linear students.
//!
//! Each student maps a standardized presence vector to one logit with a single
//! weight vector and no bias. Training minimizes soft-target binary
//! cross-entropy between the student's and the teacher's logistic
//! probabilities plus an L1 penalty on the weights, using Adam over shuffled
//! mini-batches.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::concept_space::PresenceVector;
use crate::error::{Error, Result};
use crate::fingerprint::fingerprint;
use crate::math::{dot, ln, sigmoid, sqrt};
use crate::matrix::Matrix;
use crate::tuning::{BoundSet, TuningInstruction};

/// Probabilities entering the cross-entropy are clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub const PROB_EPS: f64 = 1e-7;
/// Floor for per-concept standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l1_weight: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub normalize_inputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 2084,
            learning_rate: 0.2,
            l1_weight: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            normalize_inputs: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Parameter("learning_rate must be positive".into()));
        }
        if !(self.l1_weight >= 0.0) || !self.l1_weight.is_finite() {
            return Err(Error::Parameter("l1_weight must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::Parameter("Adam betas must be in [0, 1)".into()));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::Parameter("adam_epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Hash of every field that influences training.
    pub fn fingerprint(&self) -> String {
        fingerprint(&format!(
            "epochs={};batch={};lr={:?};l1={:?};b1={:?};b2={:?};eps={:?};seed={};norm={}",
            self.epochs,
            self.batch_size,
            self.learning_rate,
            self.l1_weight,
            self.adam_beta1,
            self.adam_beta2,
            self.adam_epsilon,
            self.seed,
            self.normalize_inputs
        ))
    }
}

/// Fixed input standardization computed once from the training presences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn from_presence(presence: &Matrix) -> Result<Self> {
        let (n, c) = (presence.rows(), presence.cols());
        if n == 0 {
            return Err(Error::Domain("cannot compute statistics of zero rows".into()));
        }
        let mut mean = vec![0.0; c];
        for row in presence.iter_rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; c];
        for row in presence.iter_rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| sqrt(v / n as f64).max(STD_FLOOR))
            .collect();
        Ok(NormStats { mean, std })
    }

    fn standardize_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, x), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.std) {
            *o = (x - m) / s;
        }
    }
}

/// A single-layer linear student for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentModel {
    pub class_name: String,
    pub weights: Vec<f64>,
    /// `None` when the student was trained on raw presences.
    pub norm: Option<NormStats>,
    /// Seconds since the Unix epoch, if the producer recorded one.
    pub trained_at: Option<u64>,
    pub config_fingerprint: String,
}

impl StudentModel {
    pub fn num_concepts(&self) -> usize {
        self.weights.len()
    }

    /// Student logit for one raw presence row.
    pub fn logit(&self, presence: &[f64]) -> Result<f64> {
        if presence.len() != self.weights.len() {
            return Err(Error::dim("presence vector", self.weights.len(), presence.len()));
        }
        Ok(match &self.norm {
            Some(norm) => presence
                .iter()
                .zip(&self.weights)
                .zip(norm.mean.iter().zip(&norm.std))
                .map(|((x, w), (m, s))| w * ((x - m) / s))
                .sum(),
            None => dot(&self.weights, presence),
        })
    }

    /// Logits for every row of a presence matrix.
    pub fn logits(&self, presence: &Matrix) -> Result<Vec<f64>> {
        presence.iter_rows().map(|r| self.logit(r)).collect()
    }

    /// Rows as the student sees them (standardized when the student normalizes).
    pub(crate) fn inputs(&self, presence: &Matrix) -> Result<Matrix> {
        if presence.cols() != self.weights.len() {
            return Err(Error::dim("presence columns", self.weights.len(), presence.cols()));
        }
        match &self.norm {
            None => Ok(presence.clone()),
            Some(norm) => {
                let mut out = Matrix::zeros(presence.rows(), presence.cols());
                for i in 0..presence.rows() {
                    norm.standardize_into(presence.row(i), out.row_mut(i));
                }
                Ok(out)
            }
        }
    }
}

/// Student logit for a presence vector.
pub fn forward(student: &StudentModel, presence: &PresenceVector) -> Result<f64> {
    student.logit(&presence.values)
}

/// One student per class, in teacher column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentEnsemble {
    pub class_names: Vec<String>,
    pub students: Vec<StudentModel>,
    /// Tuning instructions applied so far, per class.
    pub histories: Vec<Vec<TuningInstruction>>,
}

impl StudentEnsemble {
    pub fn new(students: Vec<StudentModel>) -> Result<Self> {
        if students.is_empty() {
            return Err(Error::Parameter("an ensemble needs at least one student".into()));
        }
        let class_names: Vec<String> = students.iter().map(|s| s.class_name.clone()).collect();
        let mut seen = BTreeSet::new();
        for name in &class_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Ingestion(format!("duplicate class '{name}'")));
            }
        }
        let c = students[0].num_concepts();
        if let Some(s) = students.iter().find(|s| s.num_concepts() != c) {
            return Err(Error::dim("student weight count", c, s.num_concepts()).in_class(&s.class_name));
        }
        let histories = vec![Vec::new(); students.len()];
        Ok(StudentEnsemble {
            class_names,
            students,
            histories,
        })
    }

    pub fn len(&self) -> usize {
        self.students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }

    pub fn class_index(&self, class_name: &str) -> Result<usize> {
        self.class_names
            .iter()
            .position(|c| c == class_name)
            .ok_or_else(|| Error::Lookup(format!("unknown class '{class_name}'")))
    }

    pub fn student(&self, class_name: &str) -> Result<&StudentModel> {
        Ok(&self.students[self.class_index(class_name)?])
    }

    /// Hash over the members' fingerprints and tuning history lengths.
    pub fn fingerprint(&self) -> String {
        let mut text = String::new();
        for (s, h) in self.students.iter().zip(&self.histories) {
            text.push_str(&format!("{}:{}:{};", s.class_name, s.config_fingerprint, h.len()));
        }
        fingerprint(&text)
    }
}

/// Raw teacher logits, one column per class.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherLogits {
    pub class_names: Vec<String>,
    pub values: Matrix,
}

impl TeacherLogits {
    pub fn new(class_names: Vec<String>, values: Matrix) -> Result<Self> {
        if class_names.len() != values.cols() {
            return Err(Error::dim("teacher logit columns", class_names.len(), values.cols()));
        }
        if !values.is_finite() {
            return Err(Error::Domain("teacher logits must be finite".into()));
        }
        Ok(TeacherLogits {
            class_names,
            values,
        })
    }
}

fn teacher_prob(y: f64) -> f64 {
    sigmoid(y).clamp(PROB_EPS, 1.0 - PROB_EPS)
}

fn bce(p: f64, t: f64) -> f64 {
    -(t * ln(p) + (1.0 - t) * ln(1.0 - p))
}

fn l1(w: &[f64]) -> f64 {
    w.iter().map(|x| x.abs()).sum()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Distillation loss for one instance:
/// `BCE(σ(y_student), σ(y_teacher)) + λ‖W‖₁`.
pub fn loss(y_student: f64, y_teacher: f64, weights: &[f64], l1_weight: f64) -> Result<f64> {
    if !y_student.is_finite() || !y_teacher.is_finite() || !l1_weight.is_finite() {
        return Err(Error::Domain("loss inputs must be finite".into()));
    }
    if l1_weight < 0.0 {
        return Err(Error::Domain("l1 weight must be non-negative".into()));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Domain("weights must be finite".into()));
    }
    let p = sigmoid(y_student).clamp(PROB_EPS, 1.0 - PROB_EPS);
    Ok(bce(p, teacher_prob(y_teacher)) + l1_weight * l1(weights))
}

/// Mini-batch of raw presence rows with the matching teacher logits.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub presence: &'a Matrix,
    pub teacher: &'a [f64],
}

impl Batch<'_> {
    fn check(&self, c: usize) -> Result<()> {
        if self.presence.rows() == 0 {
            return Err(Error::Domain("empty batch".into()));
        }
        if self.presence.rows() != self.teacher.len() {
            return Err(Error::dim("teacher logits", self.presence.rows(), self.teacher.len()));
        }
        if self.presence.cols() != c {
            return Err(Error::dim("presence columns", c, self.presence.cols()));
        }
        Ok(())
    }
}

/// Accumulates mean BCE and its gradient over `rows` of standardized inputs.
/// Returns the mean cross-entropy; `grad` receives the data term only.
fn accumulate(x: &Matrix, teacher_probs: &[f64], rows: &[usize], weights: &[f64], grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut total = 0.0;
    for &r in rows {
        let xr = x.row(r);
        let raw = sigmoid(dot(weights, xr));
        let p = raw.clamp(PROB_EPS, 1.0 - PROB_EPS);
        let t = teacher_probs[r];
        total += bce(p, t);
        // The clamp is flat outside the interval.
        if raw == p {
            let residual = p - t;
            for (g, xi) in grad.iter_mut().zip(xr) {
                *g += residual * xi;
            }
        }
    }
    let n = rows.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    total / n
}

fn add_l1_subgradient(grad: &mut [f64], weights: &[f64], l1_weight: f64) {
    if l1_weight > 0.0 {
        for (g, w) in grad.iter_mut().zip(weights) {
            *g += l1_weight * sign(*w);
        }
    }
}

/// Gradient of the mean batch loss with respect to the student weights.
/// The subgradient of `|w|` at zero is taken as zero.
pub fn batch_gradient(batch: Batch<'_>, student: &StudentModel, l1_weight: f64) -> Result<Vec<f64>> {
    batch.check(student.num_concepts())?;
    let x = student.inputs(batch.presence)?;
    let probs: Vec<f64> = batch.teacher.iter().map(|&y| teacher_prob(y)).collect();
    let rows: Vec<usize> = (0..x.rows()).collect();
    let mut grad = vec![0.0; student.num_concepts()];
    accumulate(&x, &probs, &rows, &student.weights, &mut grad);
    add_l1_subgradient(&mut grad, &student.weights, l1_weight);
    Ok(grad)
}

/// Mean loss over a batch.
pub fn batch_loss(batch: Batch<'_>, student: &StudentModel, l1_weight: f64) -> Result<f64> {
    batch.check(student.num_concepts())?;
    let mut total = 0.0;
    for (row, &y) in batch.presence.iter_rows().zip(batch.teacher) {
        total += loss(student.logit(row)?, y, &[], 0.0)?;
    }
    Ok(total / batch.teacher.len() as f64 + l1_weight * l1(&student.weights))
}

/// Per-epoch training trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Row-weighted mean loss over each epoch, measured before each step.
    pub epoch_losses: Vec<f64>,
}

pub(crate) struct OptimizerRun<'a> {
    pub config: &'a TrainConfig,
    pub epochs: usize,
    pub bounds: Option<&'a BoundSet>,
}

impl OptimizerRun<'_> {
    /// Adam over seeded, reshuffled mini-batches. The last partial batch is kept.
    ///
    /// The cross-entropy term drives the Adam moments; the L1 term is applied
    /// through its proximal map after each step, which lets weights settle at
    /// exactly zero. When bounds are given, weights are then projected into
    /// them, so every step ends inside the box.
    pub fn run(&self, weights: &mut [f64], x: &Matrix, teacher: &[f64]) -> Result<TrainReport> {
        let cfg = self.config;
        let n = x.rows();
        let probs: Vec<f64> = teacher.iter().map(|&y| teacher_prob(y)).collect();
        let mut adam = Adam::new(
            weights.len(),
            cfg.learning_rate,
            cfg.adam_beta1,
            cfg.adam_beta2,
            cfg.adam_epsilon,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut grad = vec![0.0; weights.len()];
        let mut report = TrainReport::default();

        for epoch in 0..self.epochs {
            order.sort_unstable();
            order.shuffle(&mut rng);
            let mut epoch_total = 0.0;
            for (b, rows) in order.chunks(cfg.batch_size).enumerate() {
                let ce = accumulate(x, &probs, rows, weights, &mut grad);
                let batch_loss = ce + cfg.l1_weight * l1(weights);
                if !batch_loss.is_finite() {
                    return Err(Error::NumericFailure { epoch, batch: b });
                }
                epoch_total += batch_loss * rows.len() as f64;
                adam.step_proximal(weights, &grad, cfg.l1_weight);
                if let Some(bounds) = self.bounds {
                    bounds.project(weights);
                }
                if weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::NumericFailure { epoch, batch: b });
                }
            }
            report.epoch_losses.push(epoch_total / n as f64);
        }
        Ok(report)
    }
}

fn check_training_inputs(presence: &Matrix, teacher: &[f64]) -> Result<()> {
    if presence.rows() == 0 {
        return Err(Error::Domain("training needs at least one row".into()));
    }
    if presence.rows() != teacher.len() {
        return Err(Error::dim("teacher logits", presence.rows(), teacher.len()));
    }
    if !presence.is_finite() {
        return Err(Error::Domain("presence matrix has non-finite entries".into()));
    }
    if teacher.iter().any(|y| !y.is_finite()) {
        return Err(Error::Domain("teacher logits must be finite".into()));
    }
    Ok(())
}

/// Trains one student from zero weights and reports per-epoch losses.
pub fn train_student_with_report(
    presence: &Matrix,
    teacher_column: &[f64],
    config: &TrainConfig,
    class_name: &str,
) -> Result<(StudentModel, TrainReport)> {
    config.validate()?;
    check_training_inputs(presence, teacher_column)?;
    let norm = if config.normalize_inputs {
        Some(NormStats::from_presence(presence)?)
    } else {
        None
    };
    let mut student = StudentModel {
        class_name: class_name.into(),
        weights: vec![0.0; presence.cols()],
        norm,
        trained_at: None,
        config_fingerprint: config.fingerprint(),
    };
    let x = student.inputs(presence)?;
    let run = OptimizerRun {
        config,
        epochs: config.epochs,
        bounds: None,
    };
    let report = run.run(&mut student.weights, &x, teacher_column)?;
    Ok((student, report))
}

pub fn train_student(
    presence: &Matrix,
    teacher_column: &[f64],
    config: &TrainConfig,
    class_name: &str,
) -> Result<StudentModel> {
    train_student_with_report(presence, teacher_column, config, class_name).map(|(s, _)| s)
}

/// Trains one student per teacher column. Columns are independent, so the
/// result does not depend on class order.
pub fn train_ensemble(presence: &Matrix, teacher: &TeacherLogits, config: &TrainConfig) -> Result<StudentEnsemble> {
    if teacher.class_names.is_empty() {
        return Err(Error::Parameter("teacher has no classes".into()));
    }
    let students = teacher
        .class_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            train_student(presence, &teacher.values.column(j), config, name).map_err(|e| e.in_class(name))
        })
        .collect::<Result<Vec<_>>>()?;
    StudentEnsemble::new(students)
}
