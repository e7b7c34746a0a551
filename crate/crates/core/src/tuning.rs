//! Interactive fine-tuning under per-concept weight bounds.
//!
//! An uptune instruction turns into a lower bound on a concept's weight and a
//! downtune instruction into an upper bound, both obtained by scaling the
//! weight the concept had when the instruction was issued. Bounds come from the
//! whole instruction history of a class, the latest instruction per concept
//! winning. Fine-tuning clips the current weights into the bounds and then runs
//! projected Adam for a few epochs.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::analytics::{self, MetricSet};
use crate::distillation::{OptimizerRun, StudentEnsemble, StudentModel, TrainConfig};
use crate::error::{Error, Result};
use crate::fingerprint::fingerprint;
use crate::matrix::Matrix;

pub const DEFAULT_UPTUNE_FACTOR: f64 = 1.5;
pub const DEFAULT_DOWNTUNE_FACTOR: f64 = 0.5;
/// Lower bound used when uptuning a concept whose weight is not positive.
pub const DEFAULT_UPTUNE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uptune,
    Downtune,
}

impl Direction {
    pub fn default_factor(self) -> f64 {
        match self {
            Direction::Uptune => DEFAULT_UPTUNE_FACTOR,
            Direction::Downtune => DEFAULT_DOWNTUNE_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningInstruction {
    pub concept_index: usize,
    pub direction: Direction,
    pub factor: f64,
    /// Weight of the concept when the instruction was issued.
    pub snapshot_weight: f64,
    pub issued_at: u64,
}

/// Captures the concept's current weight. `factor` defaults per direction.
pub fn make_instruction(
    student: &StudentModel,
    concept_index: usize,
    direction: Direction,
    factor: Option<f64>,
    issued_at: u64,
) -> Result<TuningInstruction> {
    let snapshot_weight = *student.weights.get(concept_index).ok_or_else(|| {
        Error::Lookup(format!(
            "concept {concept_index} out of range for {} concepts",
            student.num_concepts()
        ))
    })?;
    let factor = factor.unwrap_or(direction.default_factor());
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::Parameter(format!("tuning factor must be positive, got {factor}")));
    }
    Ok(TuningInstruction {
        concept_index,
        direction,
        factor,
        snapshot_weight,
        issued_at,
    })
}

/// Per-concept box constraints on student weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundSet {
    pub fn unbounded(c: usize) -> Self {
        BoundSet {
            lower: vec![f64::NEG_INFINITY; c],
            upper: vec![f64::INFINITY; c],
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn validate(&self, c: usize) -> Result<()> {
        if self.lower.len() != c || self.upper.len() != c {
            return Err(Error::dim("bound vector", c, self.lower.len().min(self.upper.len())));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::Parameter(format!("infeasible bounds for concept {i}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Clips weights into the box. Bounds must have been validated.
    pub fn project(&self, weights: &mut [f64]) {
        for ((w, lo), hi) in weights.iter_mut().zip(&self.lower).zip(&self.upper) {
            *w = w.clamp(*lo, *hi);
        }
    }

    /// Largest amount by which any weight leaves its bounds.
    pub fn max_violation(&self, weights: &[f64]) -> f64 {
        weights
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(w, (lo, hi))| (lo - w).max(w - hi).max(0.0))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPolicy {
    /// Lower bound for uptuning a concept whose snapshot weight is `<= 0`.
    pub uptune_floor: f64,
}

impl Default for BoundPolicy {
    fn default() -> Self {
        BoundPolicy {
            uptune_floor: DEFAULT_UPTUNE_FLOOR,
        }
    }
}

/// Bounds implied by an instruction history over `c` concepts, using the
/// default policy.
pub fn derive_bounds(c: usize, history: &[TuningInstruction]) -> Result<BoundSet> {
    derive_bounds_with(c, history, &BoundPolicy::default())
}

pub fn derive_bounds_with(c: usize, history: &[TuningInstruction], policy: &BoundPolicy) -> Result<BoundSet> {
    let mut latest: Vec<Option<&TuningInstruction>> = vec![None; c];
    for ins in history {
        let slot = latest
            .get_mut(ins.concept_index)
            .ok_or_else(|| Error::Lookup(format!("concept {} out of range", ins.concept_index)))?;
        *slot = Some(ins);
    }
    let mut bounds = BoundSet::unbounded(c);
    for (i, ins) in latest.into_iter().enumerate() {
        let Some(ins) = ins else { continue };
        let w = ins.snapshot_weight;
        match ins.direction {
            Direction::Uptune if w > 0.0 => bounds.lower[i] = ins.factor * w,
            Direction::Uptune => bounds.lower[i] = policy.uptune_floor,
            Direction::Downtune => bounds.upper[i] = ins.factor * w,
        }
    }
    Ok(bounds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FineTuneConfig {
    pub epochs: usize,
    /// Optimizer settings; its `epochs` field is ignored.
    pub optimizer: TrainConfig,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        FineTuneConfig {
            epochs: 3,
            optimizer: TrainConfig::default(),
        }
    }
}

/// Fine-tunes a student inside `bounds`. The result satisfies every bound exactly.
pub fn finetune(
    student: &StudentModel,
    bounds: &BoundSet,
    presence: &Matrix,
    teacher_column: &[f64],
    config: &FineTuneConfig,
) -> Result<StudentModel> {
    config.optimizer.validate()?;
    bounds.validate(student.num_concepts())?;
    if presence.rows() != teacher_column.len() {
        return Err(Error::dim("teacher logits", presence.rows(), teacher_column.len()));
    }
    let mut out = student.clone();
    bounds.project(&mut out.weights);
    if config.epochs > 0 {
        if presence.rows() == 0 {
            return Err(Error::Domain("fine-tuning needs at least one row".into()));
        }
        let x = student.inputs(presence)?;
        let run = OptimizerRun {
            config: &config.optimizer,
            epochs: config.epochs,
            bounds: Some(bounds),
        };
        run.run(&mut out.weights, &x, teacher_column)?;
    }
    Ok(out)
}

/// One recorded tuning round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub entry_id: String,
    pub class_name: String,
    pub instructions: Vec<TuningInstruction>,
    pub metric_before: MetricSet,
    pub metric_after: MetricSet,
    pub delta: MetricSet,
    pub created_at: u64,
}

/// Sum of the deltas of a sequence of entries.
pub fn cumulative_delta(entries: &[ProvenanceEntry]) -> MetricSet {
    entries
        .iter()
        .fold(MetricSet::default(), |acc, e| acc.add(&e.delta))
}

/// Data a tuning session trains and evaluates on.
#[derive(Debug, Clone, Copy)]
pub struct SessionData<'a> {
    /// Full presence matrix, N×C.
    pub presence: &'a Matrix,
    /// Teacher logits, N×k in ensemble class order.
    pub teacher: &'a Matrix,
    /// Ground-truth labels, N×k with entries in {0, 1}.
    pub labels: &'a Matrix,
    /// Rows used for fine-tuning.
    pub train_rows: &'a [usize],
    /// Rows used for the before/after metrics.
    pub eval_rows: &'a [usize],
    pub threshold: f64,
}

/// Result of a session, ready to be committed into the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub class_index: usize,
    pub student: StudentModel,
    pub history: Vec<TuningInstruction>,
    pub entry: ProvenanceEntry,
}

/// Appends `new_instructions` to the class history, fine-tunes under bounds
/// derived from the full history, and measures metrics before and after on the
/// evaluation rows. The ensemble itself is not modified; see [`commit`].
pub fn apply_session(
    ensemble: &StudentEnsemble,
    class_name: &str,
    new_instructions: &[TuningInstruction],
    data: &SessionData<'_>,
    config: &FineTuneConfig,
    entry_id: &str,
    created_at: u64,
) -> Result<SessionOutcome> {
    let j = ensemble.class_index(class_name)?;
    let student = &ensemble.students[j];
    let c = student.num_concepts();
    for ins in new_instructions {
        if ins.concept_index >= c {
            return Err(Error::Lookup(format!("concept {} out of range", ins.concept_index)));
        }
        if !(ins.factor > 0.0) || !ins.factor.is_finite() {
            return Err(Error::Parameter(format!("tuning factor must be positive, got {}", ins.factor)));
        }
    }
    let mut history = ensemble.histories[j].clone();
    history.extend_from_slice(new_instructions);
    let bounds = derive_bounds(c, &history)?;

    let labels = column_bools(data.labels, j, data.eval_rows)?;
    let eval_presence = data.presence.select_rows(data.eval_rows);
    let before = analytics::metric_set(student, &eval_presence, &labels, data.threshold)?;

    let train_presence = data.presence.select_rows(data.train_rows);
    let teacher: Vec<f64> = data.train_rows.iter().map(|&r| data.teacher.get(r, j)).collect();
    let mut tuned = finetune(student, &bounds, &train_presence, &teacher, config)
        .map_err(|e| e.in_class(class_name))?;
    tuned.config_fingerprint = fingerprint(&format!(
        "{}+{}x{}@{}",
        student.config_fingerprint,
        config.optimizer.fingerprint(),
        config.epochs,
        history.len()
    ));

    let after = analytics::metric_set(&tuned, &eval_presence, &labels, data.threshold)?;
    let entry = ProvenanceEntry {
        entry_id: entry_id.into(),
        class_name: class_name.into(),
        instructions: new_instructions.to_vec(),
        metric_before: before,
        metric_after: after,
        delta: after.sub(&before),
        created_at,
    };
    Ok(SessionOutcome {
        class_index: j,
        student: tuned,
        history,
        entry,
    })
}

/// Replaces the tuned student and its history in the ensemble.
pub fn commit(ensemble: &mut StudentEnsemble, outcome: SessionOutcome) -> ProvenanceEntry {
    ensemble.students[outcome.class_index] = outcome.student;
    ensemble.histories[outcome.class_index] = outcome.history;
    outcome.entry
}

pub(crate) fn column_bools(labels: &Matrix, j: usize, rows: &[usize]) -> Result<Vec<bool>> {
    if j >= labels.cols() {
        return Err(Error::dim("label columns", j + 1, labels.cols()));
    }
    rows.iter()
        .map(|&r| match labels.get(r, j) {
            v if v == 1.0 => Ok(true),
            v if v == 0.0 => Ok(false),
            v => Err(Error::Domain(format!("label {v} at row {r} is not 0 or 1"))),
        })
        .collect()
}
