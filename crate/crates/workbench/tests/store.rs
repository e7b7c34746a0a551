mod common;

use std::fs;

use conceptkd::dataset::Dataset;
use conceptkd::store::ensemble::{load_ensemble, save_ensemble, EnsembleDocument};
use conceptkd::store::manifest::{load_manifest, validate_manifest, Violation};
use conceptkd::store::matrix::{encode_matrix, read_matrix, round_to_f32, write_matrix};
use conceptkd::store::provenance::{append_entry, read_entries};
use conceptkd::StoreError;
use conceptkd_core::analytics::MetricSet;
use conceptkd_core::distillation::{train_ensemble, TrainConfig};
use conceptkd_core::tuning::{Direction, ProvenanceEntry, TuningInstruction};
use conceptkd_core::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

#[test]
fn large_matrix_roundtrips_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<f64> = (0..100 * 584).map(|_| f64::from(rng.random::<f32>() * 2.0 - 1.0)).collect();
    let m = Matrix::from_vec(100, 584, data).unwrap();
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.cmat");
    write_matrix(&path, &m).unwrap();
    assert_eq!(fs::metadata(&path).unwrap().len(), 24 + 4 * 100 * 584);
    let back = read_matrix(&path).unwrap();
    for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn header_overstating_rows_is_truncation() {
    let m = Matrix::zeros(5, 3);
    let mut bytes = encode_matrix(&m).unwrap();
    bytes[8..16].copy_from_slice(&10u64.to_le_bytes());
    let dir = tempdir().unwrap();
    let path = dir.path().join("short.cmat");
    fs::write(&path, &bytes).unwrap();
    match read_matrix(&path) {
        Err(e @ StoreError::Truncated { expected: 144, actual: 84, .. }) => {
            let msg = e.to_string();
            assert!(msg.contains("144") && msg.contains("84"), "{msg}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #[test]
    fn matrices_roundtrip_at_binary32(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.random_range(-1e6..1e6)).collect();
        let m = Matrix::from_vec(rows, cols, data).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.cmat");
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        prop_assert_eq!(back, round_to_f32(&m));
    }
}

#[test]
fn reference_manifest_is_clean() {
    let dir = tempdir().unwrap();
    let manifest = load_manifest(common::reference(dir.path())).unwrap();
    assert_eq!(manifest.images.len(), 100);
    assert_eq!(manifest.classes.len(), 3);
    assert!(validate_manifest(&manifest).is_ok());
    let ds = Dataset::from_manifest(manifest).unwrap();
    assert_eq!((ds.presence.rows(), ds.presence.cols(), ds.corpus.len()), (100, 16, 16));
}

#[test]
fn narrow_presence_is_one_dimension_conflict() {
    let dir = tempdir().unwrap();
    let manifest = load_manifest(common::reference(dir.path())).unwrap();
    let presence = read_matrix(manifest.resolve(&manifest.presence)).unwrap();
    let rows: Vec<Vec<f64>> = presence.iter_rows().map(|r| r[..15].to_vec()).collect();
    write_matrix(manifest.resolve(&manifest.presence), &Matrix::from_rows(&rows).unwrap()).unwrap();
    let report = validate_manifest(&manifest);
    assert_eq!(
        report.violations,
        vec![Violation::DimensionConflict { what: "presence columns (C)".into(), expected: 16, actual: 15 }]
    );
    assert!(matches!(Dataset::from_manifest(manifest), Err(StoreError::Invalid(_))));
}

#[test]
fn image_in_both_splits_is_an_overlap() {
    let dir = tempdir().unwrap();
    let mut manifest = load_manifest(common::reference(dir.path())).unwrap();
    let id = manifest.splits.train[0].clone();
    manifest.splits.validation.push(id.clone());
    let report = validate_manifest(&manifest);
    assert_eq!(report.violations, vec![Violation::SplitOverlap { image: id }]);
}

#[test]
fn every_violation_is_reported() {
    let dir = tempdir().unwrap();
    let mut manifest = load_manifest(common::reference(dir.path())).unwrap();
    fs::remove_file(manifest.resolve(&manifest.labels)).unwrap();
    fs::remove_file(manifest.resolve(&manifest.images[3].segments)).unwrap();
    manifest.splits.train.retain(|id| id != "img0001");
    manifest.splits.validation.push("ghost".into());
    manifest.classes.push("extra".into());
    let report = validate_manifest(&manifest);
    let v = &report.violations;
    assert!(v.iter().filter(|x| matches!(x, Violation::MissingFile { .. })).count() == 2, "{report}");
    assert!(v.contains(&Violation::UnassignedImage { image: "img0001".into() }));
    assert!(v.contains(&Violation::UnknownSplitImage { split: "validation".into(), image: "ghost".into() }));
    assert!(v.contains(&Violation::DimensionConflict { what: "teacher logit columns (k)".into(), expected: 4, actual: 3 }));
    assert_eq!(v.len(), 5, "{report}");
}

fn trained() -> conceptkd_core::distillation::StudentEnsemble {
    let dir = tempdir().unwrap();
    let ds = Dataset::load(common::reference(dir.path())).unwrap();
    train_ensemble(&ds.presence, &ds.teacher, &TrainConfig { batch_size: 32, ..Default::default() }).unwrap()
}

#[test]
fn ensemble_roundtrips_with_histories() {
    let mut ensemble = trained();
    for (t, (c, dir)) in [(2, Direction::Uptune), (5, Direction::Downtune), (2, Direction::Downtune)].into_iter().enumerate() {
        ensemble.histories[1].push(TuningInstruction {
            concept_index: c,
            direction: dir,
            factor: 1.0 + t as f64 / 3.0,
            snapshot_weight: 0.1 / 3.0 * t as f64,
            issued_at: t as u64,
        });
    }
    let dir = tempdir().unwrap();
    let path = dir.path().join("ens.json");
    save_ensemble(&path, &ensemble).unwrap();
    let back = load_ensemble(&path).unwrap();
    assert_eq!(back, ensemble);
    let order: Vec<u64> = back.histories[1].iter().map(|i| i.issued_at).collect();
    assert_eq!(order, vec![0, 1, 2]);
    for (a, b) in ensemble.students.iter().zip(&back.students) {
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn wrong_weight_count_names_the_class() {
    let ensemble = trained();
    let mut doc = EnsembleDocument::from_ensemble(&ensemble);
    doc.classes[2].weights.pop();
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    match load_ensemble(&path) {
        Err(StoreError::Schema { detail, .. }) => assert!(detail.contains("tvmonitor"), "{detail}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn other_schema_versions_need_migration() {
    let mut doc = EnsembleDocument::from_ensemble(&trained());
    doc.schema_version = 0;
    let dir = tempdir().unwrap();
    let path = dir.path().join("old.json");
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    assert!(matches!(load_ensemble(&path), Err(StoreError::Migration { found: 0, expected: 1, .. })));
}

fn entry(id: &str, ap: f64) -> ProvenanceEntry {
    let m = MetricSet { ap, precision: 0.5, recall: 0.25, f1: 1.0 / 3.0 };
    ProvenanceEntry {
        entry_id: id.into(),
        class_name: "sofa".into(),
        instructions: vec![],
        metric_before: m,
        metric_after: m,
        delta: MetricSet::default(),
        created_at: 7,
    }
}

#[test]
fn provenance_log_appends_and_skips_torn_tail() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("log.ndjson");
    assert!(read_entries(&path).unwrap().is_empty());
    let entries: Vec<_> = (0..3).map(|i| entry(&format!("e{i}"), 0.1 * i as f64)).collect();
    for e in &entries {
        append_entry(&path, e).unwrap();
    }
    let mut text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    text.push_str("{\"entry_id\":\"e3\",\"cla");
    fs::write(&path, text).unwrap();
    assert_eq!(read_entries(&path).unwrap(), entries);
}
