//! Temporal integration inputs: PCA over pose prototypes, sliding-window
//! trajectory segments, and their combination with object label vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gwr::{GwrNetwork, MaskedVector};

/// A fitted PCA basis: centered, orthonormal rows, components ordered by
/// explained variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `d x D`, rows orthonormal.
    pub basis: Vec<Vec<f64>>,
    /// Fraction of total variance captured by each retained component.
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn retained(&self) -> usize {
        self.basis.len()
    }

    /// Projects a vector: `basis * (w - mean)`.
    pub fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: w.len(),
            });
        }
        let centered: Vec<f64> = w.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        Ok(self
            .basis
            .iter()
            .map(|row| row.iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Fits PCA, retaining the smallest dimension whose cumulative explained
/// variance reaches `variance_target`, capped at `max_dim`.
///
/// Component signs follow a fixed convention: the largest-magnitude
/// coordinate of each basis row is positive.
pub fn fit_pca(vectors: &[Vec<f64>], variance_target: f64, max_dim: usize) -> Result<PcaModel> {
    if vectors.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "PCA needs at least 2 vectors, got {}",
            vectors.len()
        )));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "variance_target must be in (0,1], got {variance_target}"
        )));
    }
    if max_dim == 0 {
        return Err(Error::InvalidParameter("max_dim must be positive".into()));
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }

    let n = vectors.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }

    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for v in vectors {
        let c = DVector::from_iterator(dim, v.iter().zip(&mean).map(|(a, b)| a - b));
        cov += &c * c.transpose();
    }
    cov /= n - 1.0;

    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let lambdas: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvalues[i].max(0.0))
        .collect();
    let total: f64 = lambdas.iter().sum();
    if total <= f64::MIN_POSITIVE * dim as f64 {
        return Err(Error::Numerical(
            "input has no variance, PCA basis is undefined".into(),
        ));
    }

    let cap = max_dim.min(dim);
    let mut retained = cap;
    let mut cum = 0.0;
    for (i, l) in lambdas.iter().enumerate().take(cap) {
        cum += l / total;
        if cum >= variance_target - 1e-12 {
            retained = i + 1;
            break;
        }
    }

    let mut basis = Vec::with_capacity(retained);
    for &col in order.iter().take(retained) {
        let mut row: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        let mut lead = 0;
        for (i, v) in row.iter().enumerate() {
            if v.abs() > row[lead].abs() {
                lead = i;
            }
        }
        if row[lead] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        basis.push(row);
    }
    let explained_variance_ratio: Vec<f64> =
        lambdas.iter().take(retained).map(|l| l / total).collect();

    Ok(PcaModel {
        mean,
        basis,
        explained_variance_ratio,
    })
}

/// A window of `q` projected prototype weights, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSegment {
    pub values: Vec<f64>,
    /// Index of the newest source frame inside the encoded sequence.
    pub frame_index: usize,
}

/// Slides a window of width `q` over the per-frame winner prototypes of
/// `net`, projecting each weight through `pca`. Yields `m - q + 1` segments
/// ordered oldest to newest; each concatenates newest-first.
pub fn encode_trajectories(
    net: &GwrNetwork,
    pca: &PcaModel,
    frames: &[MaskedVector],
    q: usize,
) -> Result<Vec<ActionSegment>> {
    if q == 0 {
        return Err(Error::InvalidParameter("window width must be >= 1".into()));
    }
    if frames.len() < q {
        return Err(Error::WindowExceedsFrames {
            len: frames.len(),
            q,
        });
    }
    let mut projected = Vec::with_capacity(frames.len());
    for f in frames {
        let m = net.find_bmus(&f.values, f.mask_slice())?;
        let w = &net.neuron(m.bmu).expect("bmu exists").weight;
        projected.push(pca.project(w)?);
    }
    let d = pca.retained();
    let mut segments = Vec::with_capacity(frames.len() - q + 1);
    for i in (q - 1)..frames.len() {
        let mut values = Vec::with_capacity(q * d);
        for back in 0..q {
            values.extend_from_slice(&projected[i - back]);
        }
        segments.push(ActionSegment {
            values,
            frame_index: i,
        });
    }
    Ok(segments)
}

/// Multi-hot object category vector of a fixed length `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectLabelVector(pub Vec<f64>);

impl ObjectLabelVector {
    /// All-zero vector, used as the configurable missing-object fallback.
    pub fn zeros(c: usize) -> Self {
        Self(vec![0.0; c])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Unions one-hot encodings of the given category ids into a multi-hot
/// vector of length `c`.
pub fn merge_object_labels(categories: &[usize], c: usize) -> Result<ObjectLabelVector> {
    if categories.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut v = vec![0.0; c];
    for &cat in categories {
        if cat >= c {
            return Err(Error::InvalidParameter(format!(
                "category id {cat} out of range (C = {c})"
            )));
        }
        v[cat] = 1.0;
    }
    Ok(ObjectLabelVector(v))
}

/// A pose window joined with its sequence's object label vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionObjectSegment {
    pub values: Vec<f64>,
    pub frame_index: usize,
    /// Present during training, absent at inference.
    pub activity: Option<usize>,
}

/// Appends the label vector to every segment, tagging each with the
/// sequence's activity label.
pub fn build_integration_set(
    segments: &[ActionSegment],
    label: &ObjectLabelVector,
    activity: Option<usize>,
) -> Result<Vec<ActionObjectSegment>> {
    if segments.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(segments
        .iter()
        .map(|s| {
            let mut values = Vec::with_capacity(s.values.len() + label.len());
            values.extend_from_slice(&s.values);
            values.extend_from_slice(&label.0);
            ActionObjectSegment {
                values,
                frame_index: s.frame_index,
                activity,
            }
        })
        .collect())
}
