//! Seeded synthetic dataset generation.
//!
//! Stands in for recorded data: pose trajectories are piecewise-linear
//! interpolations between keyposes with Gaussian jitter and a per-subject
//! similarity distortion; object descriptors are drawn from per-category
//! Gaussian clusters. Identical specs produce byte-identical datasets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    Dataset, DatasetManifest, ObjectInstance, SequenceRecord, DATASET_FORMAT_VERSION,
};
use crate::error::{Error, Result};
use crate::features::pose::PoseFrame;

/// Joint positions for one keypose, canonical joint order.
pub type KeyPose = [[f64; 3]; 9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDef {
    pub name: String,
    /// Cluster center of this category's local descriptors.
    pub descriptor_mean: Vec<f64>,
    pub descriptor_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityDef {
    pub name: String,
    /// Category ids of the objects this activity is performed with.
    pub categories: Vec<usize>,
    pub frames_per_repetition: usize,
    pub keyposes: Vec<KeyPose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub descriptor_dim: usize,
    pub subjects: usize,
    pub repetitions: usize,
    /// Uniform range of per-subject body scale.
    pub subject_scale: (f64, f64),
    /// Uniform range of per-subject translation, per axis.
    pub subject_offset: (f64, f64),
    /// Standard deviation of per-coordinate pose jitter, meters.
    pub pose_noise_sigma: f64,
    /// Object instances emitted per assigned category per sequence.
    pub views_per_instance: usize,
    pub descriptors_per_view: usize,
    pub object_categories: Vec<CategoryDef>,
    pub activities: Vec<ActivityDef>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if self.object_categories.is_empty() {
            return fail("spec defines no object categories".into());
        }
        if self.activities.is_empty() {
            return fail("spec defines no activities".into());
        }
        if self.descriptor_dim == 0
            || self.subjects == 0
            || self.repetitions == 0
            || self.views_per_instance == 0
            || self.descriptors_per_view == 0
        {
            return fail("counts in the spec must all be positive".into());
        }
        if self.pose_noise_sigma < 0.0 {
            return fail("pose_noise_sigma must be non-negative".into());
        }
        if self.subject_scale.1 < self.subject_scale.0
            || self.subject_offset.1 < self.subject_offset.0
        {
            return fail("subject ranges must satisfy low <= high".into());
        }
        for (i, c) in self.object_categories.iter().enumerate() {
            if c.descriptor_mean.len() != self.descriptor_dim {
                return fail(format!(
                    "category {i}: descriptor mean has dimension {}, expected {}",
                    c.descriptor_mean.len(),
                    self.descriptor_dim
                ));
            }
            if c.descriptor_sigma < 0.0 {
                return fail(format!("category {i}: negative sigma"));
            }
        }
        for (i, a) in self.activities.iter().enumerate() {
            if a.categories.is_empty() {
                return fail(format!("activity {i}: no assigned categories"));
            }
            for &c in &a.categories {
                if c >= self.object_categories.len() {
                    return fail(format!("activity {i}: category id {c} out of range"));
                }
            }
            if a.keyposes.is_empty() {
                return fail(format!("activity {i}: no keyposes"));
            }
            if a.frames_per_repetition == 0 {
                return fail(format!("activity {i}: zero frames per repetition"));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Interpolates the keypose list at `u` in `[0, 1]`.
fn interpolate(keyposes: &[KeyPose], u: f64) -> KeyPose {
    if keyposes.len() == 1 {
        return keyposes[0];
    }
    let segments = (keyposes.len() - 1) as f64;
    let pos = u.clamp(0.0, 1.0) * segments;
    let idx = (pos.floor() as usize).min(keyposes.len() - 2);
    let frac = pos - idx as f64;
    let (a, b) = (&keyposes[idx], &keyposes[idx + 1]);
    let mut out = [[0.0; 3]; 9];
    for j in 0..9 {
        for axis in 0..3 {
            out[j][axis] = a[j][axis] * (1.0 - frac) + b[j][axis] * frac;
        }
    }
    out
}

/// Generates a dataset from the spec; fully deterministic for a given seed.
pub fn synth_generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.pose_noise_sigma)
        .map_err(|e| Error::InvalidParameter(format!("pose noise: {e}")))?;

    struct SubjectShape {
        scale: f64,
        offset: [f64; 3],
    }
    let shapes: Vec<SubjectShape> = (0..spec.subjects)
        .map(|_| SubjectShape {
            scale: uniform(&mut rng, spec.subject_scale),
            offset: [
                uniform(&mut rng, spec.subject_offset),
                uniform(&mut rng, spec.subject_offset),
                uniform(&mut rng, spec.subject_offset),
            ],
        })
        .collect();

    let mut records = Vec::new();
    for (s, shape) in shapes.iter().enumerate() {
        for (ai, act) in spec.activities.iter().enumerate() {
            for rep in 0..spec.repetitions {
                let n = act.frames_per_repetition;
                let mut frames = Vec::with_capacity(n);
                for t in 0..n {
                    let u = if n == 1 { 0.0 } else { t as f64 / (n - 1) as f64 };
                    let base = interpolate(&act.keyposes, u);
                    let mut positions = [[0.0; 3]; 9];
                    for j in 0..9 {
                        for axis in 0..3 {
                            positions[j][axis] = base[j][axis] * shape.scale
                                + shape.offset[axis]
                                + noise.sample(&mut rng);
                        }
                    }
                    frames.push(PoseFrame {
                        t,
                        positions,
                        valid: [true; 9],
                    });
                }
                let mut objects = Vec::new();
                for &cat in &act.categories {
                    let def = &spec.object_categories[cat];
                    let cluster = Normal::new(0.0, def.descriptor_sigma)
                        .map_err(|e| Error::InvalidParameter(format!("descriptor noise: {e}")))?;
                    for _ in 0..spec.views_per_instance {
                        let descriptors: Vec<Vec<f64>> = (0..spec.descriptors_per_view)
                            .map(|_| {
                                def.descriptor_mean
                                    .iter()
                                    .map(|m| m + cluster.sample(&mut rng))
                                    .collect()
                            })
                            .collect();
                        objects.push(ObjectInstance {
                            category: cat,
                            descriptors,
                        });
                    }
                }
                records.push(SequenceRecord {
                    id: format!("s{s:02}_a{ai:02}_r{rep:02}"),
                    subject: format!("subject{s:02}"),
                    activity: ai,
                    frames,
                    objects,
                });
            }
        }
    }

    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        object_categories: spec.object_categories.iter().map(|c| c.name.clone()).collect(),
        activities: spec.activities.iter().map(|a| a.name.clone()).collect(),
        descriptor_dim: spec.descriptor_dim,
        sequences: records
            .iter()
            .map(|r| format!("sequences/{}.json", r.id))
            .collect(),
    };
    let ds = Dataset { manifest, records };
    ds.validate()?;
    Ok(ds)
}
