//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::fs;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use common::{conceptkd_ok, reference, s};
use conceptkd::api::{students_report, StudentsReport};
use conceptkd::config::WorkbenchConfig;
use conceptkd::dataset::{Dataset, Split};
use conceptkd::service::router;
use conceptkd::session::SessionState;
use conceptkd::store::ensemble::{encode_ensemble, load_ensemble};
use conceptkd::training::train_ensemble_parallel;
use conceptkd_core::analytics::{average_precision, classify, classify_all, quadrants, MetricKind, DEFAULT_THRESHOLD};
use conceptkd_core::concept_space::{map_image, ConceptCorpus, SegmentEmbeddings};
use conceptkd_core::distillation::{
    batch_gradient, batch_loss, train_ensemble, Batch, StudentEnsemble, StudentModel, TrainConfig,
};
use conceptkd_core::synthetic::{suppressed_concept_scenario, PlantedTask};
use conceptkd_core::tuning::{apply_session, commit, derive_bounds, make_instruction, Direction, FineTuneConfig, SessionData};
use conceptkd_core::{Error, Matrix};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn raw_student(weights: Vec<f64>) -> StudentModel {
    StudentModel {
        class_name: "c".into(),
        weights,
        norm: None,
        trained_at: None,
        config_fingerprint: String::new(),
    }
}

fn gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-5;
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for case in 0..100 {
        let c = rng.random_range(2..16);
        let n = rng.random_range(1..32);
        let presence = uniform(&mut rng, n, c, 0.0, 1.0);
        let teacher: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let weights: Vec<f64> = (0..c)
            .map(|_| {
                let m = rng.random_range(0.05..1.5);
                if rng.random::<bool>() { m } else { -m }
            })
            .collect();
        let lambda = if case % 2 == 0 { 1e-4 } else { 1e-2 };
        let batch = Batch { presence: &presence, teacher: &teacher };
        let g = batch_gradient(batch, &raw_student(weights.clone()), lambda).unwrap();
        let mut diff = 0.0;
        let mut scale = 0.0;
        for i in 0..c {
            let mut plus = weights.clone();
            plus[i] += h;
            let mut minus = weights.clone();
            minus[i] -= h;
            let fd = (batch_loss(batch, &raw_student(plus), lambda).unwrap()
                - batch_loss(batch, &raw_student(minus), lambda).unwrap())
                / (2.0 * h);
            diff += (g[i] - fd).powi(2);
            scale += g[i].powi(2);
        }
        worst = worst.max(diff.sqrt() / scale.sqrt().max(1e-8));
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-6 && elapsed < Duration::from_secs(1),
        format!("max relative error {worst:.2e} over 100 cases in {elapsed:.2?}"),
    )
}

fn mapping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for f in 0..200 {
        let d = rng.random_range(2..24);
        let c = rng.random_range(1..40);
        let segs = rng.random_range(1..12);
        let vectors = uniform(&mut rng, c, d, -1.0, 1.0);
        let rows = uniform(&mut rng, segs, d, -1.0, 1.0);
        let names = (0..c).map(|i| format!("k{i}")).collect();
        let corpus = ConceptCorpus::new(names, vectors.clone()).unwrap();
        let image = SegmentEmbeddings::new(format!("f{f}"), rows.clone()).unwrap();
        let got = map_image(&image, &corpus).unwrap().values;
        for (j, &value) in got.iter().enumerate() {
            let concept = vectors.row(j);
            let mut best = f64::NEG_INFINITY;
            for r in 0..segs {
                let seg = rows.row(r);
                let mut dot = 0.0;
                let mut na = 0.0;
                let mut nb = 0.0;
                for t in 0..d {
                    dot += seg[t] * concept[t];
                    na += seg[t] * seg[t];
                    nb += concept[t] * concept[t];
                }
                best = best.max(dot / (na.sqrt() * nb.sqrt()));
            }
            worst = worst.max((value - best.max(0.0)).abs());
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max deviation {worst:.2e} over 200 fixtures in {elapsed:.2?}"),
    )
}

fn ap_oracle() -> Outcome {
    let scores = [0.91, -0.3, 0.55, 2.4, 0.02, -1.7, 1.15, 0.6];
    let mut worst = 0.0_f64;
    for mask in 0u32..256 {
        let labels: Vec<bool> = (0..8).map(|i| mask >> i & 1 == 1).collect();
        let got = average_precision(&scores, &labels);
        if mask == 0 {
            if !matches!(got, Err(Error::UndefinedMetric(_))) {
                return Err("all-negative labels should be undefined".into());
            }
            continue;
        }
        // Mean over positives of the precision among everything ranked at or above it.
        let mut sum = 0.0;
        for i in (0..8).filter(|&i| labels[i]) {
            let above: Vec<usize> = (0..8).filter(|&j| scores[j] >= scores[i]).collect();
            sum += above.iter().filter(|&&j| labels[j]).count() as f64 / above.len() as f64;
        }
        let expected = sum / mask.count_ones() as f64;
        worst = worst.max((got.unwrap() - expected).abs());
    }
    check(worst <= 1e-12, format!("max deviation {worst:.2e} over 256 label patterns"))
}

fn agreement(ensemble: &StudentEnsemble, presence: &Matrix, teacher: &Matrix) -> (f64, f64) {
    let mut total = 0usize;
    let mut worst = 1.0_f64;
    for (j, student) in ensemble.students.iter().enumerate() {
        let logits = student.logits(presence).unwrap();
        let agree = logits
            .iter()
            .enumerate()
            .filter(|&(i, &y)| classify(y, DEFAULT_THRESHOLD) == classify(teacher.get(i, j), DEFAULT_THRESHOLD))
            .count();
        total += agree;
        worst = worst.min(agree as f64 / logits.len() as f64);
    }
    (total as f64 / (presence.rows() * ensemble.len()) as f64, worst)
}

fn near_zero(ensemble: &StudentEnsemble) -> usize {
    ensemble.students.iter().flat_map(|s| &s.weights).filter(|w| w.abs() < 1e-3).count()
}

fn planted_and_sparsity() -> (Outcome, Outcome) {
    let data = PlantedTask::default().generate().unwrap();
    let config = TrainConfig::default();
    let start = Instant::now();
    let ensemble = train_ensemble_parallel(&data.presence, &data.teacher, &config).unwrap();
    let elapsed = start.elapsed();
    let (overall, worst) = agreement(&ensemble, &data.presence, &data.teacher.values);
    let planted = check(
        overall >= 0.99 && elapsed < Duration::from_secs(60),
        format!(
            "agreement {:.4} (lowest class {:.4}), {} classes trained in {elapsed:.2?}",
            overall,
            worst,
            ensemble.len()
        ),
    );

    let dense = train_ensemble_parallel(&data.presence, &data.teacher, &TrainConfig { l1_weight: 0.0, ..config })
        .unwrap();
    let (sparse_count, dense_count) = (near_zero(&ensemble), near_zero(&dense));
    let sparsity = check(
        sparse_count > dense_count,
        format!("|w| < 1e-3: {sparse_count} with l1 1e-4 vs {dense_count} without"),
    );
    (planted, sparsity)
}

fn bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = PlantedTask { instances: 600, concepts: 12, classes: 2, active_pairs: 2, ..Default::default() }
        .generate()
        .unwrap();
    let labels = data.labels.clone();
    let rows: Vec<usize> = (0..600).collect();
    let session = SessionData {
        presence: &data.presence,
        teacher: &data.teacher.values,
        labels: &labels,
        train_rows: &rows[..420],
        eval_rows: &rows[420..],
        threshold: DEFAULT_THRESHOLD,
    };
    let train = TrainConfig { batch_size: 128, ..Default::default() };
    let base = train_ensemble(&data.presence, &data.teacher, &train).unwrap();
    let tune = FineTuneConfig { epochs: 2, optimizer: train };
    let mut worst = 0.0_f64;
    let mut sessions = 0;
    for history in 0..50 {
        let mut ensemble = base.clone();
        let class = rng.random_range(0..2);
        let name = ensemble.students[class].class_name.clone();
        for step in 0..rng.random_range(1..5u64) {
            let instructions: Vec<_> = (0..rng.random_range(1..5))
                .map(|_| {
                    let dir = if rng.random::<bool>() { Direction::Uptune } else { Direction::Downtune };
                    let factor = rng.random::<bool>().then(|| rng.random_range(0.2..2.5));
                    make_instruction(&ensemble.students[class], rng.random_range(0..12), dir, factor, step).unwrap()
                })
                .collect();
            let outcome =
                match apply_session(&ensemble, &name, &instructions, &session, &tune, &format!("h{history}-{step}"), step) {
                    Ok(o) => o,
                    // Contradictory instructions on one concept are rejected up front.
                    Err(Error::Parameter(_)) => continue,
                    Err(e) => return Err(format!("history {history}: {e}")),
                };
            sessions += 1;
            commit(&mut ensemble, outcome);
            let b = derive_bounds(12, &ensemble.histories[class]).unwrap();
            worst = worst.max(b.max_violation(&ensemble.students[class].weights));
        }
    }
    check(worst == 0.0 && sessions > 50, format!("max violation {worst:e} over {sessions} sessions in 50 histories"))
}

fn efficacy() -> Outcome {
    let sc = suppressed_concept_scenario(0).unwrap();
    let labels = sc.labels.column(0);
    let eval_labels: Vec<bool> = sc.eval_rows.iter().map(|&r| labels[r] > 0.5).collect();
    let eval_presence = sc.presence.select_rows(&sc.eval_rows);
    let eval_teacher: Vec<f64> = sc.eval_rows.iter().map(|&r| sc.teacher.get(r, 0)).collect();
    let teacher_preds = classify_all(&eval_teacher, DEFAULT_THRESHOLD);
    let student_only_fn = |e: &StudentEnsemble| {
        let preds = classify_all(&e.students[0].logits(&eval_presence).unwrap(), DEFAULT_THRESHOLD);
        quadrants(&preds, &teacher_preds, &eval_labels).unwrap().positive.student_only_wrong
    };
    let mut ensemble = sc.ensemble.clone();
    let before = student_only_fn(&ensemble);
    let ins = make_instruction(&ensemble.students[0], sc.concept, Direction::Uptune, Some(1.5), 1).unwrap();
    let data = SessionData {
        presence: &sc.presence,
        teacher: &sc.teacher,
        labels: &sc.labels,
        train_rows: &sc.train_rows,
        eval_rows: &sc.eval_rows,
        threshold: DEFAULT_THRESHOLD,
    };
    let config = FineTuneConfig { epochs: 3, ..Default::default() };
    let outcome = apply_session(&ensemble, "target", &[ins], &data, &config, "s1", 1).map_err(|e| e.to_string())?;
    let entry = commit(&mut ensemble, outcome);
    let after = student_only_fn(&ensemble);
    check(
        after < before && entry.metric_after.ap > entry.metric_before.ap,
        format!(
            "student-only false negatives {before} -> {after}, AP {:.4} -> {:.4}",
            entry.metric_before.ap, entry.metric_after.ap
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempdir().unwrap();
    let manifest = reference(dir.path());
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        conceptkd_ok(&["distill", "--manifest", s(&manifest), "--out", s(out), "--seed", "11"]);
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());

    let ds = Dataset::load(&manifest).unwrap();
    let config = WorkbenchConfig::resolve(None, Some(11)).unwrap();
    let (presence, teacher) = ds.training_view(Split::Train).unwrap();
    let lib: Vec<Vec<u8>> = (0..2)
        .map(|_| encode_ensemble(&train_ensemble(&presence, &teacher, &config.train).unwrap()))
        .collect();
    check(
        a == b && lib[0] == lib[1] && a == lib[0],
        format!("two CLI runs and two library runs, {} bytes each, identical: {}", a.len(), a == lib[0]),
    )
}

fn cross_interface() -> Outcome {
    let dir = tempdir().unwrap();
    let manifest = reference(dir.path());
    let ens = dir.path().join("e.json");
    conceptkd_ok(&["distill", "--manifest", s(&manifest), "--out", s(&ens)]);
    let ds = Dataset::load(&manifest).unwrap();
    let ensemble = load_ensemble(&ens).unwrap();
    let config = WorkbenchConfig::default();
    let state = Arc::new(SessionState::new(ds.clone(), ensemble.clone(), config.clone()).unwrap());
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let mut compared = 0;
    for metric in ["ap", "f1", "precision", "recall", "accuracy"] {
        let cli: StudentsReport = serde_json::from_str(&conceptkd_ok(&[
            "eval", "--manifest", s(&manifest), "--ensemble", s(&ens), "--metric", metric, "--json",
        ]))
        .unwrap();
        let http: StudentsReport = runtime.block_on(async {
            let req = Request::get(format!("/students?metric={metric}")).body(Body::empty()).unwrap();
            let res = router(state.clone()).oneshot(req).await.unwrap();
            let bytes = res.into_body().collect().await.unwrap().to_bytes();
            serde_json::from_slice(&bytes).unwrap()
        });
        let lib = students_report(&ds, &ensemble, &config, metric.parse::<MetricKind>().unwrap()).unwrap();
        if cli != lib || http != lib {
            return Err(format!("reports differ for metric {metric}"));
        }
        compared += lib.classes.len();
    }
    check(true, format!("CLI, HTTP and library agree on {compared} class reports across 5 metrics"))
}

fn main() -> ExitCode {
    let (planted, sparsity) = planted_and_sparsity();
    let results = [
        ("gradient finite differences", gradient()),
        ("mapping brute-force oracle", mapping()),
        ("average precision exhaustive oracle", ap_oracle()),
        ("planted-teacher distillation", planted),
        ("L1 sparsity", sparsity),
        ("bound satisfaction", bounds()),
        ("tuning efficacy", efficacy()),
        ("determinism", determinism()),
        ("cross-interface equality", cross_interface()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
