//! On-disk dataset format, validation, and preprocessing.
//!
//! A dataset directory holds `manifest.json` plus one JSON file per sequence.
//! The manifest defines the object category and activity universes (dense
//! indices in listed order) and the descriptor dimension shared by every
//! object instance.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::pose::PoseFrame;

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    /// Category names; list order defines the label-vector index order.
    pub object_categories: Vec<String>,
    pub activities: Vec<String>,
    pub descriptor_dim: usize,
    /// Paths of sequence files relative to the manifest.
    pub sequences: Vec<String>,
}

/// One observed object: its category plus a set of local descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub category: usize,
    pub descriptors: Vec<Vec<f64>>,
}

/// A recorded action sequence: tracked frames plus the objects involved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub subject: String,
    pub activity: usize,
    pub frames: Vec<PoseFrame>,
    pub objects: Vec<ObjectInstance>,
}

impl SequenceRecord {
    /// Sorted, deduplicated category ids of the attached objects.
    pub fn category_set(&self) -> Vec<usize> {
        let mut cats: Vec<usize> = self.objects.iter().map(|o| o.category).collect();
        cats.sort_unstable();
        cats.dedup();
        cats
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub records: Vec<SequenceRecord>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        if self.manifest.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: self.manifest.format_version,
                supported: DATASET_FORMAT_VERSION,
            });
        }
        if self.manifest.object_categories.is_empty() {
            return Err(Error::InvalidDataset("no object categories".into()));
        }
        if self.manifest.activities.is_empty() {
            return Err(Error::InvalidDataset("no activities".into()));
        }
        if self.manifest.descriptor_dim == 0 {
            return Err(Error::InvalidDataset("descriptor_dim must be positive".into()));
        }
        for r in &self.records {
            validate_record(r, &self.manifest)?;
        }
        Ok(())
    }

    /// Subject ids in record order, as consumed by split planning.
    pub fn subjects(&self) -> Vec<String> {
        self.records.iter().map(|r| r.subject.clone()).collect()
    }

    /// A dataset holding only the given record indices (same universes).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let records: Vec<SequenceRecord> =
            indices.iter().map(|&i| self.records[i].clone()).collect();
        let mut manifest = self.manifest.clone();
        manifest.sequences = records
            .iter()
            .map(|r| format!("sequences/{}.json", r.id))
            .collect();
        Dataset { manifest, records }
    }
}

fn validate_record(r: &SequenceRecord, manifest: &DatasetManifest) -> Result<()> {
    let fail = |msg: String| Err(Error::InvalidDataset(format!("record {:?}: {msg}", r.id)));
    if r.id.is_empty() || r.id.contains('/') || r.id.contains('\\') {
        return fail("id must be non-empty and contain no path separators".into());
    }
    if r.activity >= manifest.activities.len() {
        return fail(format!("activity index {} out of range", r.activity));
    }
    if r.frames.is_empty() {
        return fail("no frames".into());
    }
    for w in r.frames.windows(2) {
        if w[1].t <= w[0].t {
            return fail("frames are not strictly time-ordered".into());
        }
    }
    for f in &r.frames {
        for (i, p) in f.positions.iter().enumerate() {
            if f.valid[i] && p.iter().any(|v| !v.is_finite()) {
                return fail(format!("non-finite coordinate in frame t={}", f.t));
            }
        }
    }
    for (oi, obj) in r.objects.iter().enumerate() {
        if obj.category >= manifest.object_categories.len() {
            return fail(format!("object {oi}: category {} out of range", obj.category));
        }
        for d in &obj.descriptors {
            if d.len() != manifest.descriptor_dim {
                return fail(format!(
                    "object {oi}: descriptor dimension {} != {}",
                    d.len(),
                    manifest.descriptor_dim
                ));
            }
            if d.iter().any(|v| !v.is_finite()) {
                return fail(format!("object {oi}: non-finite descriptor value"));
            }
        }
    }
    Ok(())
}

/// Loads and validates a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join("manifest.json");
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: manifest.format_version,
            supported: DATASET_FORMAT_VERSION,
        });
    }
    let mut records = Vec::with_capacity(manifest.sequences.len());
    for rel in &manifest.sequences {
        let path = dir.join(rel);
        let text = fs::read_to_string(&path).map_err(|e| {
            Error::InvalidDataset(format!("missing sequence file {}: {e}", path.display()))
        })?;
        records.push(serde_json::from_str::<SequenceRecord>(&text)?);
    }
    let ds = Dataset { manifest, records };
    ds.validate()?;
    Ok(ds)
}

/// Writes a dataset directory (manifest plus one file per sequence).
pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    dataset.validate()?;
    fs::create_dir_all(dir.join("sequences"))?;
    let mut manifest = dataset.manifest.clone();
    manifest.sequences = dataset
        .records
        .iter()
        .map(|r| format!("sequences/{}.json", r.id))
        .collect();
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    for r in &dataset.records {
        fs::write(
            dir.join("sequences").join(format!("{}.json", r.id)),
            serde_json::to_string(r)?,
        )?;
    }
    Ok(())
}

/// Median-downsamples a sequence and optionally appends a mirrored copy.
///
/// Each output frame is the per-coordinate median over one non-overlapping
/// window of input frames; a joint stays valid when at least half the
/// window's samples carry it. A trailing partial window is kept.
pub fn preprocess(
    record: &SequenceRecord,
    downsample_window: usize,
    mirror: bool,
) -> Result<Vec<SequenceRecord>> {
    if downsample_window == 0 {
        return Err(Error::InvalidParameter(
            "downsample window must be >= 1".into(),
        ));
    }
    if record.frames.is_empty() {
        return Err(Error::EmptyData);
    }
    let frames = if downsample_window == 1 {
        record.frames.clone()
    } else {
        record
            .frames
            .chunks(downsample_window)
            .enumerate()
            .map(|(t, chunk)| median_frame(chunk, t))
            .collect()
    };
    let base = SequenceRecord {
        frames,
        ..record.clone()
    };
    let mut out = Vec::with_capacity(if mirror { 2 } else { 1 });
    if mirror {
        let mirrored = SequenceRecord {
            id: format!("{}_mirror", base.id),
            frames: base.frames.iter().map(|f| f.mirrored()).collect(),
            ..base.clone()
        };
        out.push(base);
        out.push(mirrored);
    } else {
        out.push(base);
    }
    Ok(out)
}

fn median_frame(chunk: &[PoseFrame], t: usize) -> PoseFrame {
    let mut positions = [[0.0; 3]; 9];
    let mut valid = [false; 9];
    for j in 0..9 {
        let present: Vec<&PoseFrame> = chunk.iter().filter(|f| f.valid[j]).collect();
        if 2 * present.len() >= chunk.len() && !present.is_empty() {
            valid[j] = true;
            for axis in 0..3 {
                let mut vals: Vec<f64> = present.iter().map(|f| f.positions[j][axis]).collect();
                vals.sort_by(|a, b| a.total_cmp(b));
                let m = vals.len();
                positions[j][axis] = if m % 2 == 1 {
                    vals[m / 2]
                } else {
                    0.5 * (vals[m / 2 - 1] + vals[m / 2])
                };
            }
        }
    }
    PoseFrame { t, positions, valid }
}
