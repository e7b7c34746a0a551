//! Response payloads shared by the CLI and the HTTP service. Every number in
//! them comes straight from a library computation.

use conceptkd_core::analytics::{
    classify_all, evaluate_class, gap_ranking, influence_sweep, default_grid, top_concepts, AgreementPartition,
    ClassEvaluation, DiscrepancyContext, GapEntry, MetricCurves, MetricKind, QuadrantRates, SortMode,
};
use conceptkd_core::distillation::StudentEnsemble;
use conceptkd_core::tsne::Projection2D;
use conceptkd_core::tuning::{
    apply_session, make_instruction, Direction, ProvenanceEntry, SessionData, SessionOutcome, TuningInstruction,
};
use conceptkd_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::config::WorkbenchConfig;
use crate::dataset::{Dataset, Split};

/// Failure classes callers map to exit codes or HTTP statuses.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApiError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("class '{0}' is already tuning")]
    Busy(String),
    #[error("{0}")]
    Internal(String),
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Lookup(msg) => ApiError::NotFound(msg),
            CoreError::Parameter(msg) | CoreError::UndefinedMetric(msg) => ApiError::Invalid(msg),
            CoreError::Class { class, source } => match ApiError::from(*source) {
                ApiError::Internal(msg) => ApiError::Internal(format!("class '{class}': {msg}")),
                other => other,
            },
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<crate::error::StoreError> for ApiError {
    fn from(e: crate::error::StoreError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

fn class_index(ensemble: &StudentEnsemble, class: &str) -> ApiResult<usize> {
    ensemble
        .class_index(class)
        .map_err(|_| ApiError::NotFound(format!("unknown class '{class}'")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCount {
    pub name: String,
    pub positives: usize,
    pub train_positives: usize,
    pub validation_positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub fingerprint: String,
    pub id: String,
    pub instances: usize,
    pub train: usize,
    pub validation: usize,
    pub concepts: usize,
    pub dim: usize,
    pub classes: Vec<ClassCount>,
}

pub fn dataset_summary(ds: &Dataset, ensemble: &StudentEnsemble) -> DatasetSummary {
    let count = |j: usize, rows: &[usize]| ds.label_column(j, rows).into_iter().filter(|&l| l).count();
    let all: Vec<usize> = (0..ds.presence.rows()).collect();
    DatasetSummary {
        fingerprint: ensemble.fingerprint(),
        id: ds.manifest.id.clone(),
        instances: ds.presence.rows(),
        train: ds.train_rows.len(),
        validation: ds.validation_rows.len(),
        concepts: ds.corpus.len(),
        dim: ds.corpus.dim(),
        classes: ds
            .class_names()
            .iter()
            .enumerate()
            .map(|(j, name)| ClassCount {
                name: name.clone(),
                positives: count(j, &all),
                train_positives: count(j, &ds.train_rows),
                validation_positives: count(j, &ds.validation_rows),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    #[serde(flatten)]
    pub evaluation: ClassEvaluation,
    pub positive_rates: QuadrantRates,
    pub negative_rates: QuadrantRates,
    /// Share of evaluated instances that are positive.
    pub positive_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentsReport {
    pub fingerprint: String,
    pub metric: MetricKind,
    pub split: Split,
    pub threshold: f64,
    /// Classes by descending teacher-minus-student gap.
    pub ranking: Vec<GapEntry>,
    /// Per-class detail, in ranking order.
    pub classes: Vec<ClassReport>,
}

pub fn evaluate(ds: &Dataset, ensemble: &StudentEnsemble, cfg: &WorkbenchConfig, class: usize) -> ApiResult<ClassEvaluation> {
    let rows = ds.rows(cfg.eval_split);
    let presence = ds.presence.select_rows(rows);
    Ok(evaluate_class(
        &ensemble.students[class],
        &presence,
        &ds.teacher_column(class, rows),
        &ds.label_column(class, rows),
        cfg.threshold,
    )?)
}

pub fn students_report(
    ds: &Dataset,
    ensemble: &StudentEnsemble,
    cfg: &WorkbenchConfig,
    metric: MetricKind,
) -> ApiResult<StudentsReport> {
    let evaluations = (0..ensemble.len())
        .map(|j| evaluate(ds, ensemble, cfg, j))
        .collect::<ApiResult<Vec<_>>>()?;
    let ranking = gap_ranking(&evaluations, metric);
    let classes = ranking
        .iter()
        .map(|g| {
            let e = evaluations.iter().find(|e| e.class_name == g.class_name).expect("ranked class").clone();
            let (p, n) = (e.quadrants.positive, e.quadrants.negative);
            let total = p.subset_size + n.subset_size;
            ClassReport {
                positive_rates: p.rates(),
                negative_rates: n.rates(),
                positive_share: if total == 0 { 0.0 } else { p.subset_size as f64 / total as f64 },
                evaluation: e,
            }
        })
        .collect();
    Ok(StudentsReport {
        fingerprint: ensemble.fingerprint(),
        metric,
        split: cfg.eval_split,
        threshold: cfg.threshold,
        ranking,
        classes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub image_id: String,
    pub presence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptDetail {
    pub index: usize,
    pub name: String,
    pub weight: f64,
    /// Ranking score under the requested sort mode.
    pub score: f64,
    pub curves: MetricCurves,
    /// Evaluation images where the concept is most present.
    pub examples: Vec<Example>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptsReport {
    pub fingerprint: String,
    pub class: String,
    pub sort: SortMode,
    pub concepts: Vec<ConceptDetail>,
}

pub const EXAMPLES_PER_CONCEPT: usize = 3;

/// Weight sweep for one concept of one class on the evaluation split.
pub fn sweep(
    ds: &Dataset,
    ensemble: &StudentEnsemble,
    cfg: &WorkbenchConfig,
    class: &str,
    concept: &str,
    points: Option<usize>,
) -> ApiResult<MetricCurves> {
    let j = class_index(ensemble, class)?;
    let c = ds
        .corpus
        .index_of(concept)
        .ok_or_else(|| ApiError::NotFound(format!("unknown concept '{concept}'")))?;
    sweep_index(ds, ensemble, cfg, j, c, points)
}

fn sweep_index(
    ds: &Dataset,
    ensemble: &StudentEnsemble,
    cfg: &WorkbenchConfig,
    j: usize,
    c: usize,
    points: Option<usize>,
) -> ApiResult<MetricCurves> {
    let student = &ensemble.students[j];
    let grid = match points {
        None => default_grid(student.weights[c]),
        Some(n) if n >= 2 => {
            let hi = default_grid(student.weights[c]).last().copied().unwrap_or(0.5);
            (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
        }
        Some(n) => return Err(ApiError::Invalid(format!("sweep needs at least 2 points, got {n}"))),
    };
    let rows = ds.rows(cfg.eval_split);
    Ok(influence_sweep(
        student,
        c,
        &ds.presence.select_rows(rows),
        &ds.label_column(j, rows),
        &grid,
        cfg.threshold,
    )?)
}

pub fn concepts_report(
    ds: &Dataset,
    ensemble: &StudentEnsemble,
    cfg: &WorkbenchConfig,
    class: &str,
    k: usize,
    sort: SortMode,
) -> ApiResult<ConceptsReport> {
    let j = class_index(ensemble, class)?;
    let student = &ensemble.students[j];
    let rows = ds.rows(cfg.eval_split);
    let presence = ds.presence.select_rows(rows);
    let labels = ds.label_column(j, rows);
    let partition = AgreementPartition::new(
        &classify_all(&student.logits(&presence)?, cfg.threshold),
        &classify_all(&ds.teacher_column(j, rows), cfg.threshold),
        &labels,
    )?;
    let ctx = DiscrepancyContext { presence: &presence, partition: &partition };
    let ranking = top_concepts(student, k, sort, Some(ctx))?;
    let concepts = ranking
        .entries
        .iter()
        .map(|e| {
            let c = e.concept_index;
            let mut order: Vec<usize> = (0..rows.len()).collect();
            order.sort_by(|&a, &b| presence.get(b, c).total_cmp(&presence.get(a, c)).then(a.cmp(&b)));
            let examples = order
                .into_iter()
                .take(EXAMPLES_PER_CONCEPT)
                .map(|i| Example { image_id: ds.image_id(rows[i]).to_string(), presence: presence.get(i, c) })
                .collect();
            Ok(ConceptDetail {
                index: c,
                name: ds.corpus.names()[c].clone(),
                weight: student.weights[c],
                score: e.score,
                curves: sweep_index(ds, ensemble, cfg, j, c, None)?,
                examples,
            })
        })
        .collect::<ApiResult<Vec<_>>>()?;
    Ok(ConceptsReport { fingerprint: ensemble.fingerprint(), class: class.into(), sort, concepts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedConcept {
    pub index: usize,
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub fingerprint: String,
    pub class: Option<String>,
    pub concepts: Vec<ProjectedConcept>,
    /// Indices of the class's top concepts by weight.
    pub highlight: Vec<usize>,
}

pub const DEFAULT_HIGHLIGHT: usize = 10;

pub fn projection_report(
    ds: &Dataset,
    ensemble: &StudentEnsemble,
    projection: &Projection2D,
    class: Option<&str>,
    k: usize,
) -> ApiResult<ProjectionReport> {
    let highlight = match class {
        Some(name) => {
            let j = class_index(ensemble, name)?;
            top_concepts(&ensemble.students[j], k, SortMode::Weight, None)?
                .entries
                .iter()
                .map(|e| e.concept_index)
                .collect()
        }
        None => Vec::new(),
    };
    Ok(ProjectionReport {
        fingerprint: ensemble.fingerprint(),
        class: class.map(str::to_string),
        concepts: projection
            .coords
            .iter()
            .enumerate()
            .map(|(i, [x, y])| ProjectedConcept { index: i, name: ds.corpus.names()[i].clone(), x: *x, y: *y })
            .collect(),
        highlight,
    })
}

/// A concept named or given by corpus index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConceptRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionSpec {
    pub concept: ConceptRef,
    pub direction: Direction,
    #[serde(default)]
    pub factor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TuneRequest {
    #[serde(default)]
    pub instructions: Vec<InstructionSpec>,
    /// Overrides the configured number of fine-tuning epochs.
    #[serde(default)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResponse {
    pub fingerprint: String,
    pub class: String,
    pub evaluation: ClassEvaluation,
    pub entry: ProvenanceEntry,
}

pub fn compile_instructions(
    ds: &Dataset,
    ensemble: &StudentEnsemble,
    class: &str,
    specs: &[InstructionSpec],
    issued_at: u64,
) -> ApiResult<Vec<TuningInstruction>> {
    let j = class_index(ensemble, class)?;
    specs
        .iter()
        .map(|spec| {
            let c = match &spec.concept {
                ConceptRef::Index(i) if *i < ds.corpus.len() => *i,
                ConceptRef::Index(i) => return Err(ApiError::NotFound(format!("unknown concept index {i}"))),
                ConceptRef::Name(n) => ds
                    .corpus
                    .index_of(n)
                    .ok_or_else(|| ApiError::NotFound(format!("unknown concept '{n}'")))?,
            };
            if let Some(f) = spec.factor {
                if !(f > 0.0 && f.is_finite()) {
                    return Err(ApiError::Invalid(format!("factor for concept {c} must be positive and finite, got {f}")));
                }
            }
            Ok(make_instruction(&ensemble.students[j], c, spec.direction, spec.factor, issued_at)?)
        })
        .collect()
}

/// Runs one tuning session without touching the ensemble.
pub fn run_session(
    ds: &Dataset,
    ensemble: &StudentEnsemble,
    cfg: &WorkbenchConfig,
    class: &str,
    request: &TuneRequest,
    entry_id: &str,
    now: u64,
) -> ApiResult<SessionOutcome> {
    let instructions = compile_instructions(ds, ensemble, class, &request.instructions, now)?;
    let mut ft = cfg.finetune();
    if let Some(e) = request.epochs {
        ft.epochs = e;
    }
    let data = SessionData {
        presence: &ds.presence,
        teacher: &ds.teacher.values,
        labels: &ds.labels,
        train_rows: &ds.train_rows,
        eval_rows: ds.rows(cfg.eval_split),
        threshold: cfg.threshold,
    };
    Ok(apply_session(ensemble, class, &instructions, &data, &ft, entry_id, now)?)
}

pub fn entry_id(class: &str, sequence: usize) -> String {
    format!("{class}-{sequence:04}")
}
