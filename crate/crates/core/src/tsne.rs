//! Exact t-SNE projection of concept vectors to 2D.
//!
//! Corpora are at most a few thousand concepts, so the O(C²) gradient is
//! computed exactly rather than through a Barnes-Hut approximation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::concept_space::ConceptCorpus;
use crate::error::{Error, Result};
use crate::math::{exp, gaussian, ln};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            seed: 0,
        }
    }
}

impl TsneParams {
    /// Defaults with the perplexity lowered to `(c - 1) / 3` when the corpus
    /// is too small for perplexity 30.
    pub fn for_corpus_size(c: usize) -> Self {
        let max = (c.saturating_sub(1)) as f64 / 3.0;
        let mut p = Self::default();
        if p.perplexity > max {
            p.perplexity = max.max(1.0);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    /// One `[x, y]` pair per corpus concept, in corpus order.
    pub coords: Vec<[f64; 2]>,
    pub params: TsneParams,
}

const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 250;
const MIN_GAIN: f64 = 0.01;

pub fn project_concepts(corpus: &ConceptCorpus, params: &TsneParams) -> Result<Projection2D> {
    let n = corpus.len();
    if n < 3 {
        return Err(Error::Parameter(format!("t-SNE needs at least 3 concepts, got {n}")));
    }
    if !(params.perplexity > 0.0) || params.perplexity >= n as f64 {
        return Err(Error::Parameter(format!(
            "perplexity {} must be in (0, {n})",
            params.perplexity
        )));
    }
    if !(params.learning_rate > 0.0) {
        return Err(Error::Parameter("t-SNE learning rate must be positive".into()));
    }

    let dist = squared_distances(corpus);
    let p = joint_probabilities(&dist, n, params.perplexity);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut y: Vec<f64> = (0..2 * n).map(|_| 1e-4 * gaussian(&mut rng)).collect();
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0; 2 * n];
    let mut grad = vec![0.0; 2 * n];
    let mut num = vec![0.0; n * n];

    for iter in 0..params.iterations {
        let exaggeration = if iter < EXAGGERATION_ITERS { EXAGGERATION } else { 1.0 };
        let momentum = if iter < EXAGGERATION_ITERS { 0.5 } else { 0.8 };

        // Student-t affinities in the embedding.
        let mut sum_q = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = y[2 * i] - y[2 * j];
                let dy = y[2 * i + 1] - y[2 * j + 1];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = q;
                num[j * n + i] = q;
                sum_q += 2.0 * q;
            }
        }
        let sum_q = sum_q.max(f64::MIN_POSITIVE);

        for i in 0..n {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let mult = (exaggeration * p[i * n + j] - w / sum_q) * w;
                gx += mult * (y[2 * i] - y[2 * j]);
                gy += mult * (y[2 * i + 1] - y[2 * j + 1]);
            }
            grad[2 * i] = 4.0 * gx;
            grad[2 * i + 1] = 4.0 * gy;
        }

        for k in 0..2 * n {
            let same_sign = (grad[k] > 0.0) == (update[k] > 0.0);
            gains[k] = if same_sign { gains[k] * 0.8 } else { gains[k] + 0.2 };
            if gains[k] < MIN_GAIN {
                gains[k] = MIN_GAIN;
            }
            update[k] = momentum * update[k] - params.learning_rate * gains[k] * grad[k];
            y[k] += update[k];
        }

        let (mx, my) = (0..n).fold((0.0, 0.0), |(sx, sy), i| (sx + y[2 * i], sy + y[2 * i + 1]));
        let (mx, my) = (mx / n as f64, my / n as f64);
        for i in 0..n {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }
    }

    let coords: Vec<[f64; 2]> = (0..n).map(|i| [y[2 * i], y[2 * i + 1]]).collect();
    if coords.iter().any(|c| !c[0].is_finite() || !c[1].is_finite()) {
        return Err(Error::Domain("t-SNE produced non-finite coordinates".into()));
    }
    Ok(Projection2D {
        coords,
        params: *params,
    })
}

fn squared_distances(corpus: &ConceptCorpus) -> Vec<f64> {
    let n = corpus.len();
    let v = corpus.vectors();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = v
                .row(i)
                .iter()
                .zip(v.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    }
    d
}

/// Symmetrized input affinities, with each row's Gaussian bandwidth found by
/// bisection on the entropy so that `2^H` matches the perplexity.
fn joint_probabilities(dist: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target = ln(perplexity);
    let mut p = vec![0.0; n * n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let (mut beta, mut lo, mut hi) = (1.0_f64, f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..200 {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                row[j] = if j == i { 0.0 } else { exp(-beta * dist[i * n + j]) };
                sum += row[j];
                weighted += dist[i * n + j] * row[j];
            }
            let sum = sum.max(f64::MIN_POSITIVE);
            let entropy = ln(sum) + beta * weighted / sum;
            let diff = entropy - target;
            if diff.abs() < 1e-5 {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
            }
        }
        let sum: f64 = row.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        for j in 0..n {
            p[i * n + j] = row[j] / sum;
        }
    }
    let mut joint = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] = ((p[i * n + j] + p[j * n + i]) / (2.0 * n as f64)).max(1e-12);
        }
    }
    joint
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use alloc::string::ToString;

    fn small_corpus(n: usize) -> ConceptCorpus {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..4).map(|d| ((i * 7 + d * 3) % 11) as f64 + 1.0).collect())
            .collect();
        ConceptCorpus::new(
            (0..n).map(|i| i.to_string()).collect(),
            Matrix::from_rows(&rows).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn shape_and_determinism() {
        let c = small_corpus(4);
        let params = TsneParams {
            perplexity: 1.0,
            iterations: 200,
            ..Default::default()
        };
        let a = project_concepts(&c, &params).unwrap();
        let b = project_concepts(&c, &params).unwrap();
        assert_eq!(a.coords.len(), 4);
        assert_eq!(a, b);
    }

    #[test]
    fn perplexity_must_be_below_corpus_size() {
        let c = small_corpus(5);
        let params = TsneParams {
            perplexity: 5.0,
            ..Default::default()
        };
        assert!(matches!(project_concepts(&c, &params), Err(Error::Parameter(_))));
    }

    #[test]
    fn too_few_concepts() {
        let c = small_corpus(2);
        let params = TsneParams {
            perplexity: 0.5,
            ..Default::default()
        };
        assert!(matches!(project_concepts(&c, &params), Err(Error::Parameter(_))));
    }

    #[test]
    fn joint_probabilities_sum_to_one() {
        let c = small_corpus(10);
        let d = squared_distances(&c);
        let p = joint_probabilities(&d, 10, 3.0);
        let s: f64 = p.iter().enumerate().filter(|(k, _)| k / 10 != k % 10).map(|(_, v)| v).sum();
        assert!((s - 1.0).abs() < 1e-6, "{s}");
    }

    #[test]
    fn small_corpus_defaults() {
        assert_eq!(TsneParams::for_corpus_size(16).perplexity, 5.0);
        assert_eq!(TsneParams::for_corpus_size(584).perplexity, 30.0);
    }
}
