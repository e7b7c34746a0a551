//! Evaluation signals: average precision, thresholded metrics, student/teacher
//! agreement quadrants, gap ranking, concept rankings and influence sweeps.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distillation::StudentModel;
use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::matrix::Matrix;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_GRID_POINTS: usize = 41;

/// Positive iff the logistic probability of `logit` reaches `threshold`.
pub fn classify(logit: f64, threshold: f64) -> bool {
    sigmoid(logit) >= threshold
}

pub fn classify_all(logits: &[f64], threshold: f64) -> Vec<bool> {
    logits.iter().map(|&l| classify(l, threshold)).collect()
}

fn check_len(what: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension {
            what,
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

/// Indices sorted by descending score; equal scores keep ascending index order.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Non-interpolated average precision: the mean, over positives, of the
/// precision at each positive's rank.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_len("labels", scores.len(), labels.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Domain("scores must be finite".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::UndefinedMetric("average precision needs at least one positive".into()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in ranking(scores).iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall, F1 and accuracy. Empty denominators give 0.
pub fn prf1_accuracy(preds: &[bool], labels: &[bool]) -> Result<Prf1> {
    check_len("labels", preds.len(), labels.len())?;
    let (mut tp, mut fp, mut fneg, mut tn) = (0, 0, 0, 0);
    for (&p, &l) in preds.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Prf1 {
        precision,
        recall,
        f1,
        accuracy: ratio(tp + tn, preds.len()),
    })
}

/// Agreement counts within one label subset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrantCell {
    pub both_correct: usize,
    pub student_only_wrong: usize,
    pub both_wrong: usize,
    pub teacher_only_wrong: usize,
    pub subset_size: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadrantRates {
    pub both_correct: f64,
    pub student_only_wrong: f64,
    pub both_wrong: f64,
    pub teacher_only_wrong: f64,
}

impl QuadrantCell {
    /// Each count divided by the subset size (0 for an empty subset).
    pub fn rates(&self) -> QuadrantRates {
        let n = self.subset_size;
        QuadrantRates {
            both_correct: ratio(self.both_correct, n),
            student_only_wrong: ratio(self.student_only_wrong, n),
            both_wrong: ratio(self.both_wrong, n),
            teacher_only_wrong: ratio(self.teacher_only_wrong, n),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrantStats {
    pub positive: QuadrantCell,
    pub negative: QuadrantCell,
}

pub fn quadrants(student_preds: &[bool], teacher_preds: &[bool], labels: &[bool]) -> Result<QuadrantStats> {
    check_len("teacher predictions", student_preds.len(), teacher_preds.len())?;
    check_len("labels", student_preds.len(), labels.len())?;
    let mut stats = QuadrantStats::default();
    for ((&s, &t), &l) in student_preds.iter().zip(teacher_preds).zip(labels) {
        let cell = if l { &mut stats.positive } else { &mut stats.negative };
        cell.subset_size += 1;
        match (s == l, t == l) {
            (true, true) => cell.both_correct += 1,
            (false, true) => cell.student_only_wrong += 1,
            (false, false) => cell.both_wrong += 1,
            (true, false) => cell.teacher_only_wrong += 1,
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Ap,
    Precision,
    Recall,
    F1,
    Accuracy,
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ap" => Ok(MetricKind::Ap),
            "precision" => Ok(MetricKind::Precision),
            "recall" => Ok(MetricKind::Recall),
            "f1" => Ok(MetricKind::F1),
            "accuracy" => Ok(MetricKind::Accuracy),
            other => Err(Error::Parameter(format!("unknown metric '{other}'"))),
        }
    }
}

/// AP plus thresholded metrics for one scorer on one class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ap: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

impl Metrics {
    pub fn get(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::Ap => self.ap,
            MetricKind::Precision => self.precision,
            MetricKind::Recall => self.recall,
            MetricKind::F1 => self.f1,
            MetricKind::Accuracy => self.accuracy,
        }
    }
}

/// Metrics of a logit vector against labels.
pub fn score_metrics(logits: &[f64], labels: &[bool], threshold: f64) -> Result<Metrics> {
    let ap = average_precision(logits, labels)?;
    let m = prf1_accuracy(&classify_all(logits, threshold), labels)?;
    Ok(Metrics {
        ap,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        accuracy: m.accuracy,
    })
}

/// The four metrics recorded per tuning round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub ap: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricSet {
    pub fn sub(&self, other: &MetricSet) -> MetricSet {
        MetricSet {
            ap: self.ap - other.ap,
            precision: self.precision - other.precision,
            recall: self.recall - other.recall,
            f1: self.f1 - other.f1,
        }
    }

    pub fn add(&self, other: &MetricSet) -> MetricSet {
        MetricSet {
            ap: self.ap + other.ap,
            precision: self.precision + other.precision,
            recall: self.recall + other.recall,
            f1: self.f1 + other.f1,
        }
    }
}

impl From<Metrics> for MetricSet {
    fn from(m: Metrics) -> Self {
        MetricSet {
            ap: m.ap,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        }
    }
}

pub fn metric_set(student: &StudentModel, presence: &Matrix, labels: &[bool], threshold: f64) -> Result<MetricSet> {
    let logits = student.logits(presence)?;
    score_metrics(&logits, labels, threshold).map(MetricSet::from)
}

/// Student and teacher evaluation of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEvaluation {
    pub class_name: String,
    pub student: Metrics,
    pub teacher: Metrics,
    pub quadrants: QuadrantStats,
}

pub fn evaluate_class(
    student: &StudentModel,
    presence: &Matrix,
    teacher_logits: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<ClassEvaluation> {
    let student_logits = student.logits(presence)?;
    check_len("teacher logits", student_logits.len(), teacher_logits.len())?;
    let quadrants = quadrants(
        &classify_all(&student_logits, threshold),
        &classify_all(teacher_logits, threshold),
        labels,
    )?;
    Ok(ClassEvaluation {
        class_name: student.class_name.clone(),
        student: score_metrics(&student_logits, labels, threshold)?,
        teacher: score_metrics(teacher_logits, labels, threshold)?,
        quadrants,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub class_name: String,
    pub student: f64,
    pub teacher: f64,
    pub gap: f64,
}

/// Classes by descending `teacher - student` gap in `metric`; ties by class name.
pub fn gap_ranking(classes: &[ClassEvaluation], metric: MetricKind) -> Vec<GapEntry> {
    let mut entries: Vec<GapEntry> = classes
        .iter()
        .map(|c| {
            let (s, t) = (c.student.get(metric), c.teacher.get(metric));
            GapEntry {
                class_name: c.class_name.clone(),
                student: s,
                teacher: t,
                gap: t - s,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.gap.total_cmp(&a.gap).then_with(|| a.class_name.cmp(&b.class_name)));
    entries
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelSubset {
    #[serde(rename = "P")]
    Positive,
    #[serde(rename = "N")]
    Negative,
}

/// Per-instance label and whether student and teacher predictions agree.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementPartition {
    labels: Vec<bool>,
    aligned: Vec<bool>,
}

impl AgreementPartition {
    pub fn new(student_preds: &[bool], teacher_preds: &[bool], labels: &[bool]) -> Result<Self> {
        check_len("teacher predictions", student_preds.len(), teacher_preds.len())?;
        check_len("labels", student_preds.len(), labels.len())?;
        Ok(AgreementPartition {
            labels: labels.to_vec(),
            aligned: student_preds.iter().zip(teacher_preds).map(|(s, t)| s == t).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(aligned, misaligned)` row indices of one label subset.
    pub fn cells(&self, subset: LabelSubset) -> (Vec<usize>, Vec<usize>) {
        let want = subset == LabelSubset::Positive;
        let mut aligned = Vec::new();
        let mut misaligned = Vec::new();
        for (i, (&l, &a)) in self.labels.iter().zip(&self.aligned).enumerate() {
            if l == want {
                if a {
                    aligned.push(i);
                } else {
                    misaligned.push(i);
                }
            }
        }
        (aligned, misaligned)
    }
}

/// Mean presence of `concept` over misaligned instances minus its mean over
/// aligned instances, within the chosen label subset.
pub fn presence_discrepancy(
    presence: &Matrix,
    partition: &AgreementPartition,
    concept: usize,
    subset: LabelSubset,
) -> Result<f64> {
    check_len("partition rows", presence.rows(), partition.len())?;
    if concept >= presence.cols() {
        return Err(Error::Lookup(format!("concept {concept} out of range")));
    }
    let (aligned, misaligned) = partition.cells(subset);
    if aligned.is_empty() || misaligned.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "not rankable: {subset:?} subset has {} aligned and {} misaligned instances",
            aligned.len(),
            misaligned.len()
        )));
    }
    let mean = |rows: &[usize]| rows.iter().map(|&r| presence.get(r, concept)).sum::<f64>() / rows.len() as f64;
    Ok(mean(&misaligned) - mean(&aligned))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricCurves {
    pub grid: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub f1: Vec<f64>,
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
}

/// 41 evenly spaced points on `[0, max(2|w|, 0.5)]`.
pub fn default_grid(current_weight: f64) -> Vec<f64> {
    let hi = (2.0 * current_weight.abs()).max(0.5);
    let last = (DEFAULT_GRID_POINTS - 1) as f64;
    (0..DEFAULT_GRID_POINTS).map(|i| hi * i as f64 / last).collect()
}

/// Thresholded metrics as one concept's weight is varied over `grid`.
pub fn influence_sweep(
    student: &StudentModel,
    concept: usize,
    presence: &Matrix,
    labels: &[bool],
    grid: &[f64],
    threshold: f64,
) -> Result<MetricCurves> {
    if concept >= student.num_concepts() {
        return Err(Error::Lookup(format!("concept {concept} out of range")));
    }
    if grid.is_empty() {
        return Err(Error::Parameter("sweep grid is empty".into()));
    }
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Parameter("sweep grid must be finite and ascending".into()));
    }
    check_len("labels", presence.rows(), labels.len())?;
    let mut probe = student.clone();
    let mut curves = MetricCurves::default();
    for &g in grid {
        probe.weights[concept] = g;
        let preds = classify_all(&probe.logits(presence)?, threshold);
        let m = prf1_accuracy(&preds, labels)?;
        curves.grid.push(g);
        curves.accuracy.push(m.accuracy);
        curves.f1.push(m.f1);
        curves.recall.push(m.recall);
        curves.precision.push(m.precision);
    }
    Ok(curves)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortMode {
    Weight,
    DiscrepancyP,
    DiscrepancyN,
}

impl FromStr for SortMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weight" => Ok(SortMode::Weight),
            "discrepancy_p" | "p" => Ok(SortMode::DiscrepancyP),
            "discrepancy_n" | "n" => Ok(SortMode::DiscrepancyN),
            other => Err(Error::Parameter(format!("unknown sort mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedConcept {
    pub concept_index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptRanking {
    pub entries: Vec<RankedConcept>,
    pub sort_mode: SortMode,
}

/// Evaluation context needed by the discrepancy sort modes.
#[derive(Debug, Clone, Copy)]
pub struct DiscrepancyContext<'a> {
    pub presence: &'a Matrix,
    pub partition: &'a AgreementPartition,
}

/// Top `k` concepts by descending score, ties by ascending concept index.
/// Discrepancy modes fail with [`Error::UndefinedMetric`] when the subset has
/// no aligned or no misaligned instances.
pub fn top_concepts(
    student: &StudentModel,
    k: usize,
    sort_mode: SortMode,
    context: Option<DiscrepancyContext<'_>>,
) -> Result<ConceptRanking> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let scores: Vec<f64> = match sort_mode {
        SortMode::Weight => student.weights.clone(),
        SortMode::DiscrepancyP | SortMode::DiscrepancyN => {
            let ctx = context.ok_or_else(|| {
                Error::Parameter("discrepancy ranking needs evaluation presences and predictions".into())
            })?;
            let subset = if sort_mode == SortMode::DiscrepancyP {
                LabelSubset::Positive
            } else {
                LabelSubset::Negative
            };
            check_len("presence columns", student.num_concepts(), ctx.presence.cols())?;
            (0..student.num_concepts())
                .map(|c| presence_discrepancy(ctx.presence, ctx.partition, c, subset))
                .collect::<Result<_>>()?
        }
    };
    let mut entries: Vec<RankedConcept> = scores
        .into_iter()
        .enumerate()
        .map(|(concept_index, score)| RankedConcept { concept_index, score })
        .collect();
    entries.sort_by(|a, b| match b.score.total_cmp(&a.score) {
        Ordering::Equal => a.concept_index.cmp(&b.concept_index),
        o => o,
    });
    entries.truncate(k);
    Ok(ConceptRanking { entries, sort_mode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn b(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&x| x == 1).collect()
    }

    #[test]
    fn classify_boundary() {
        assert!(classify(0.0, 0.5));
        assert!(!classify(-3.0, 0.5));
        assert!(classify(3.0, 0.5));
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.8, 0.1], &b(&[1, 1, 0])).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.9, 0.2], &b(&[0, 1])).unwrap(), 0.5);
        assert!(matches!(
            average_precision(&[0.9, 0.2], &b(&[0, 0])),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn ap_tie_break_lower_index_first() {
        // Both scored 0.5: index 0 ranks first.
        assert_eq!(average_precision(&[0.5, 0.5], &b(&[1, 0])).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.5, 0.5], &b(&[0, 1])).unwrap(), 0.5);
    }

    #[test]
    fn prf1_examples() {
        let m = prf1_accuracy(&b(&[1, 0, 1, 0]), &b(&[1, 0, 1, 0])).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (1.0, 1.0, 1.0, 1.0));
        let m = prf1_accuracy(&b(&[0, 0, 0]), &b(&[1, 0, 1])).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        let m = prf1_accuracy(&b(&[1, 1, 0, 0]), &b(&[1, 0, 1, 0])).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (0.5, 0.5, 0.5, 0.5));
        assert!(prf1_accuracy(&b(&[1]), &b(&[1, 0])).is_err());
    }

    #[test]
    fn quadrant_example() {
        let q = quadrants(&b(&[1, 1, 0, 0]), &b(&[1, 0, 0, 1]), &b(&[1, 1, 0, 0])).unwrap();
        assert_eq!(q.positive.both_correct, 1);
        assert_eq!(q.positive.teacher_only_wrong, 1);
        assert_eq!(q.negative.both_correct, 1);
        assert_eq!(q.negative.teacher_only_wrong, 1);
        assert_eq!(q.positive.student_only_wrong + q.negative.student_only_wrong, 0);
    }

    #[test]
    fn quadrant_rate_matches_narrative_arithmetic() {
        // 49 of 1201 positives: the student misses what the teacher gets.
        let cell = QuadrantCell {
            both_correct: 1100,
            student_only_wrong: 49,
            both_wrong: 40,
            teacher_only_wrong: 12,
            subset_size: 1201,
        };
        assert!((cell.rates().student_only_wrong - 0.0408).abs() < 5e-5);
    }

    fn eval(name: &str, s: f64, t: f64) -> ClassEvaluation {
        ClassEvaluation {
            class_name: name.into(),
            student: Metrics { ap: s, ..Default::default() },
            teacher: Metrics { ap: t, ..Default::default() },
            quadrants: QuadrantStats::default(),
        }
    }

    #[test]
    fn gap_ranking_orders() {
        let r = gap_ranking(&[eval("bicycle", 0.9511, 0.97), eval("sofa", 0.60, 0.77)], MetricKind::Ap);
        assert_eq!(r[0].class_name, "sofa");
        assert!((r[0].gap - 0.17).abs() < 1e-12);

        let r = gap_ranking(&[eval("b", 0.5, 0.5), eval("a", 0.7, 0.7), eval("c", 0.1, 0.1)], MetricKind::Ap);
        let names: Vec<_> = r.iter().map(|e| e.class_name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);

        let r = gap_ranking(
            &[eval("x", 0.51, 0.50), eval("y", 0.5, 0.5), eval("z", 0.48, 0.50)],
            MetricKind::Ap,
        );
        let names: Vec<_> = r.iter().map(|e| e.class_name.as_str()).collect();
        assert_eq!(names, ["z", "y", "x"]);
    }

    #[test]
    fn discrepancy_extreme_and_equal() {
        // positives: rows 0,1 misaligned with presence 1, rows 2,3 aligned with presence 0
        let presence = Matrix::from_rows(&[[1.0, 0.3], [1.0, 0.3], [0.0, 0.3], [0.0, 0.3]]).unwrap();
        let p = AgreementPartition::new(&b(&[0, 0, 1, 1]), &b(&[1, 1, 1, 1]), &b(&[1, 1, 1, 1])).unwrap();
        assert_eq!(presence_discrepancy(&presence, &p, 0, LabelSubset::Positive).unwrap(), 1.0);
        assert_eq!(presence_discrepancy(&presence, &p, 1, LabelSubset::Positive).unwrap(), 0.0);
        assert!(matches!(
            presence_discrepancy(&presence, &p, 0, LabelSubset::Negative),
            Err(Error::UndefinedMetric(_))
        ));
    }

    fn student(weights: Vec<f64>) -> StudentModel {
        StudentModel {
            class_name: "c".into(),
            weights,
            norm: None,
            trained_at: None,
            config_fingerprint: String::new(),
        }
    }

    #[test]
    fn top_concepts_tie_break_and_full() {
        let s = student(vec![0.1, 0.5, 0.5, -0.2]);
        let r = top_concepts(&s, 4, SortMode::Weight, None).unwrap();
        let idx: Vec<_> = r.entries.iter().map(|e| e.concept_index).collect();
        assert_eq!(idx, [1, 2, 0, 3]);
        let r = top_concepts(&s, 10, SortMode::Weight, None).unwrap();
        assert_eq!(r.entries.len(), 4);
        assert!(top_concepts(&s, 0, SortMode::Weight, None).is_err());
        assert!(top_concepts(&s, 2, SortMode::DiscrepancyP, None).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid(0.1);
        assert_eq!(g.len(), 41);
        assert_eq!((g[0], g[40]), (0.0, 0.5));
        let g = default_grid(-0.8);
        assert_eq!(g[40], 1.6);
    }

    #[test]
    fn sweep_validation() {
        let s = student(vec![0.1, 0.2]);
        let p = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        assert!(matches!(influence_sweep(&s, 2, &p, &[true], &[0.0], 0.5), Err(Error::Lookup(_))));
        assert!(influence_sweep(&s, 0, &p, &[true], &[], 0.5).is_err());
        assert!(influence_sweep(&s, 0, &p, &[true], &[0.2, 0.1], 0.5).is_err());
        let c = influence_sweep(&s, 0, &p, &[true], &[0.3], 0.5).unwrap();
        assert_eq!(c.grid.len(), 1);
    }
}
