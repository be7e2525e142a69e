//! Codebook quantization and VLAD aggregation of local descriptor sets.
//!
//! A descriptor set of arbitrary size becomes a fixed-length code: residuals
//! to the nearest codeword are accumulated per cell, concatenated, passed
//! through a signed square root, and L2-normalized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of K centroids quantizing a D-dimensional descriptor space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    centroids: Vec<Vec<f64>>,
    dim: usize,
    pub rng_seed: u64,
}

impl Codebook {
    /// Wraps centroids directly; they must be non-empty, uniform, and
    /// pairwise distinct.
    pub fn new(centroids: Vec<Vec<f64>>, rng_seed: u64) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::EmptyData);
        }
        let dim = centroids[0].len();
        if dim == 0 {
            return Err(Error::EmptyData);
        }
        for c in &centroids {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
        }
        for i in 0..centroids.len() {
            for j in (i + 1)..centroids.len() {
                if centroids[i] == centroids[j] {
                    return Err(Error::InvalidParameter(format!(
                        "centroids {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self {
            centroids,
            dim,
            rng_seed,
        })
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    /// Index of the nearest centroid; ties break toward the lower index.
    pub fn nearest(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(c, x);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        Ok(best)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fits a K-centroid codebook by Lloyd iterations from greedy farthest-point
/// seeding. Deterministic for a given seed; stops at an assignment fixpoint
/// or after 100 iterations.
pub fn fit_codebook(descriptors: &[Vec<f64>], k: usize, seed: u64) -> Result<Codebook> {
    use rand::Rng;
    use rand::SeedableRng;

    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if descriptors.is_empty() {
        return Err(Error::EmptyData);
    }
    let dim = descriptors[0].len();
    for d in descriptors {
        if d.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: d.len(),
            });
        }
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for d in descriptors {
        if !distinct.iter().any(|x| *x == d) {
            distinct.push(d);
        }
        if distinct.len() >= k {
            break;
        }
    }
    if distinct.len() < k {
        return Err(Error::TooFewDescriptors {
            needed: k,
            got: distinct.len(),
        });
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..descriptors.len());
    let mut centroids: Vec<Vec<f64>> = vec![descriptors[first].clone()];
    // min squared distance of each point to the chosen set
    let mut min_d: Vec<f64> = descriptors
        .iter()
        .map(|d| sq_dist(d, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let mut best = 0;
        let mut best_d = -1.0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > best_d {
                best = i;
                best_d = d;
            }
        }
        let chosen = descriptors[best].clone();
        for (i, d) in min_d.iter_mut().enumerate() {
            let nd = sq_dist(&descriptors[i], &chosen);
            if nd < *d {
                *d = nd;
            }
        }
        centroids.push(chosen);
    }

    let mut assignment = vec![usize::MAX; descriptors.len()];
    let mut prev_wcss = f64::INFINITY;
    for _ in 0..100 {
        let mut changed = false;
        let mut wcss = 0.0;
        for (i, d) in descriptors.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let dist = sq_dist(d, c);
                if dist < best_d {
                    best = j;
                    best_d = dist;
                }
            }
            wcss += best_d;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        debug_assert!(
            wcss <= prev_wcss + 1e-9 * (1.0 + prev_wcss.min(f64::MAX / 2.0).abs()),
            "Lloyd iteration increased WCSS: {prev_wcss} -> {wcss}"
        );
        prev_wcss = wcss;
        if !changed {
            break;
        }
        // Recompute means; clusters left empty keep their centroid.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, d) in descriptors.iter().enumerate() {
            let a = assignment[i];
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(d) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                for (c, s) in centroids[j].iter_mut().zip(&sums[j]) {
                    *c = s / counts[j] as f64;
                }
            }
        }
    }

    Codebook::new(centroids, seed)
}

/// Fixed-length aggregated-residual code; unit norm unless degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VladCode {
    pub values: Vec<f64>,
}

impl VladCode {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Aggregates a descriptor set against a codebook: per-cell residual sums,
/// signed square root, then global L2 normalization (all-zero codes stay
/// all-zero).
pub fn vlad_encode(codebook: &Codebook, descriptors: &[Vec<f64>]) -> Result<VladCode> {
    if descriptors.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = codebook.dim();
    let mut values = vec![0.0; codebook.k() * d];
    for x in descriptors {
        let cell = codebook.nearest(x)?;
        let c = &codebook.centroids()[cell];
        for i in 0..d {
            values[cell * d + i] += x[i] - c[i];
        }
    }
    for v in values.iter_mut() {
        *v = v.signum() * v.abs().sqrt();
    }
    let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in values.iter_mut() {
            *v /= norm;
        }
    }
    Ok(VladCode { values })
}
