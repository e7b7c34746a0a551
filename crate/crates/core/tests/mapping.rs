mod common;

use common::{naive_cosine, rng, uniform};
use conceptkd_core::concept_space::{label_segments, map_dataset, map_image, ConceptCorpus, SegmentEmbeddings};
use conceptkd_core::Matrix;
use proptest::prelude::*;

fn corpus_from(m: Matrix) -> ConceptCorpus {
    let names = (0..m.rows()).map(|i| format!("c{i}")).collect();
    ConceptCorpus::new(names, m).unwrap()
}

#[test]
fn labels_match_nested_loop_argmax() {
    let mut r = rng(11);
    let corpus = corpus_from(uniform(&mut r, 10, 6, -1.0, 1.0));
    let segs = SegmentEmbeddings::new("a", uniform(&mut r, 20, 6, -1.0, 1.0)).unwrap();
    let labels = label_segments(&segs, &corpus).unwrap();
    assert_eq!(labels.len(), 20);
    for (s, l) in labels.iter().enumerate() {
        let mut best = (0, f64::NEG_INFINITY);
        for c in 0..10 {
            let sim = naive_cosine(segs.rows().row(s), corpus.vectors().row(c));
            if sim > best.1 {
                best = (c, sim);
            }
        }
        assert_eq!(l.segment, s);
        assert_eq!(l.concept, best.0);
        assert!((l.similarity - best.1).abs() < 1e-12);
    }
}

#[test]
fn presence_matches_brute_force() {
    let mut r = rng(3);
    for _ in 0..20 {
        let corpus = corpus_from(uniform(&mut r, 8, 4, -1.0, 1.0));
        let segs = SegmentEmbeddings::new("a", uniform(&mut r, 5, 4, -1.0, 1.0)).unwrap();
        let p = map_image(&segs, &corpus).unwrap();
        for c in 0..8 {
            let mut best = 0.0_f64;
            for s in 0..5 {
                best = best.max(naive_cosine(segs.rows().row(s), corpus.vectors().row(c)));
            }
            assert!((p.values[c] - best).abs() < 1e-12);
        }
    }
}

#[test]
fn dataset_rows_are_per_image_maps() {
    let mut r = rng(5);
    let corpus = corpus_from(uniform(&mut r, 12, 5, -1.0, 1.0));
    let images: Vec<_> = (0..100)
        .map(|i| {
            let s = 1 + i % 4;
            SegmentEmbeddings::new(format!("img{i}"), uniform(&mut r, s, 5, -1.0, 1.0)).unwrap()
        })
        .collect();
    let m = map_dataset(&images, &corpus).unwrap();
    assert_eq!((m.rows(), m.cols()), (100, 12));
    for (i, img) in images.iter().enumerate() {
        assert_eq!(m.row(i), map_image(img, &corpus).unwrap().values.as_slice());
    }
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(
        prop::collection::vec(-1.0f64..1.0, cols).prop_filter("nonzero row", |r| r.iter().any(|v| v.abs() > 1e-3)),
        rows,
    )
    .prop_map(|rows| Matrix::from_rows(&rows).unwrap())
}

proptest! {
    #[test]
    fn presence_is_clamped_to_unit_interval(
        c in matrix(6, 4),
        s in matrix(3, 4),
    ) {
        let p = map_image(&SegmentEmbeddings::new("a", s).unwrap(), &corpus_from(c)).unwrap();
        for v in p.values {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn presence_is_scale_invariant(
        c in matrix(6, 4),
        s in matrix(3, 4),
        alpha in 0.01f64..100.0,
        beta in 0.01f64..100.0,
    ) {
        let corpus = corpus_from(c.clone());
        let base = map_image(&SegmentEmbeddings::new("a", s.clone()).unwrap(), &corpus).unwrap();
        let scale = |m: &Matrix, k: f64| Matrix::from_vec(m.rows(), m.cols(), m.as_slice().iter().map(|v| v * k).collect()).unwrap();
        let scaled = map_image(
            &SegmentEmbeddings::new("a", scale(&s, alpha)).unwrap(),
            &corpus_from(scale(&c, beta)),
        ).unwrap();
        for (a, b) in base.values.iter().zip(&scaled.values) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn permuting_corpus_permutes_presence(
        c in matrix(6, 4),
        s in matrix(3, 4),
        perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let segs = SegmentEmbeddings::new("a", s).unwrap();
        let base = map_image(&segs, &corpus_from(c.clone())).unwrap();
        let permuted = c.select_rows(&perm);
        let out = map_image(&segs, &corpus_from(permuted)).unwrap();
        for (i, &src) in perm.iter().enumerate() {
            prop_assert_eq!(out.values[i], base.values[src]);
        }
    }
}
