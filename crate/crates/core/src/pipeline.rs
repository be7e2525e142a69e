//! Layer-wise training of the three-network hierarchy and end-to-end
//! classification of pose sequences with their manipulated objects.
//!
//! Training order: pose features feed the body network, VLAD codes feed the
//! object network (which then receives category labels), the body prototypes
//! are compressed by PCA, windowed prototype trajectories are joined with
//! object label vectors into the integration set, and the integration
//! network is trained and labeled with activities.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ObjectInstance, SequenceRecord};
use crate::error::{Error, Result};
use crate::features::pose::{pose_feature, POSE_FEATURE_DIM};
use crate::features::vlad::{fit_codebook, vlad_encode, Codebook, VladCode};
use crate::gwr::{GwrNetwork, GwrParams, MaskedVector, NeuronId};
use crate::labeling::{attach_labels, classify_sequence, ClassHistograms, LabelStats};
use crate::temporal::{
    build_integration_set, encode_trajectories, fit_pca, merge_object_labels, ObjectLabelVector,
    PcaModel,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Where the object label vector of an action-object segment comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectLabelMode {
    /// Votes of the object network (the default path).
    Votes,
    /// Annotated categories, bypassing the object network.
    GroundTruth,
    /// All-zero label block; pose-only ablation.
    Zeroed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchitectureConfig {
    pub gwr_b: GwrParams,
    pub gwr_o: GwrParams,
    pub gwr_a: GwrParams,
    /// Sliding-window width over projected prototypes.
    pub window_q: usize,
    pub pca_variance_target: f64,
    pub pca_max_dim: usize,
    pub codebook_k: usize,
    pub codebook_seed: u64,
    /// Object category count; 0 derives it from the dataset manifest.
    pub category_count: usize,
    /// Median filter width applied to every sequence.
    pub downsample_window: usize,
    /// Add mirrored copies of training sequences.
    pub mirror_augment: bool,
    /// Frame rate after downsampling, informational.
    pub downsampled_fps: f64,
    pub label_mode: ObjectLabelMode,
    /// Fall back to an all-zero label vector when a sequence carries no
    /// classifiable object (otherwise an error).
    pub allow_missing_objects: bool,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            gwr_b: GwrParams {
                rng_seed: 1,
                ..GwrParams::default()
            },
            gwr_o: GwrParams {
                rng_seed: 2,
                ..GwrParams::default()
            },
            gwr_a: GwrParams {
                insertion_threshold: 0.9,
                rng_seed: 3,
                ..GwrParams::default()
            },
            window_q: 5,
            pca_variance_target: 0.9,
            pca_max_dim: 10,
            codebook_k: 8,
            codebook_seed: 4,
            category_count: 0,
            downsample_window: 3,
            mirror_augment: false,
            downsampled_fps: 10.0,
            label_mode: ObjectLabelMode::Votes,
            allow_missing_objects: true,
        }
    }
}

impl ArchitectureConfig {
    pub fn validate(&self) -> Result<()> {
        self.gwr_b.validate()?;
        self.gwr_o.validate()?;
        self.gwr_a.validate()?;
        if self.window_q == 0 {
            return Err(Error::InvalidParameter("window_q must be >= 1".into()));
        }
        if self.codebook_k == 0 {
            return Err(Error::InvalidParameter("codebook_k must be >= 1".into()));
        }
        if self.downsample_window == 0 {
            return Err(Error::InvalidParameter(
                "downsample_window must be >= 1".into(),
            ));
        }
        if !(self.pca_variance_target > 0.0 && self.pca_variance_target <= 1.0) {
            return Err(Error::InvalidParameter(
                "pca_variance_target must be in (0,1]".into(),
            ));
        }
        if self.pca_max_dim == 0 {
            return Err(Error::InvalidParameter("pca_max_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// The full trained artifact: three networks, PCA basis, codebook, label
/// statistics, and the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub config: ArchitectureConfig,
    pub object_categories: Vec<String>,
    pub activities: Vec<String>,
    pub gwr_b: GwrNetwork,
    pub gwr_o: GwrNetwork,
    pub gwr_a: GwrNetwork,
    pub pca: PcaModel,
    pub codebook: Codebook,
    pub object_histograms: ClassHistograms,
    pub object_stats: LabelStats,
    pub activity_histograms: ClassHistograms,
    pub activity_stats: LabelStats,
}

impl TrainedModel {
    pub fn category_count(&self) -> usize {
        self.object_categories.len()
    }

    /// Checks the dimensional chain across the stack.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let chain = |name: &str, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "dimensional chain broken at {name}: expected {expected}, got {got}"
                )))
            }
        };
        chain("gwr_b input", POSE_FEATURE_DIM, self.gwr_b.input_dim())?;
        chain("pca input", POSE_FEATURE_DIM, self.pca.input_dim())?;
        chain(
            "gwr_o input",
            self.codebook.k() * self.codebook.dim(),
            self.gwr_o.input_dim(),
        )?;
        chain(
            "gwr_a input",
            self.config.window_q * self.pca.retained() + self.category_count(),
            self.gwr_a.input_dim(),
        )?;
        chain(
            "object histograms",
            self.category_count(),
            self.object_histograms.classes(),
        )?;
        chain(
            "activity histograms",
            self.activities.len(),
            self.activity_histograms.classes(),
        )?;
        Ok(())
    }
}

/// Downsamples a record and encodes its frames, dropping frames whose pose
/// feature is fully masked. Errors when fewer than `q` frames survive.
fn prepare_frames(
    record: &SequenceRecord,
    downsample_window: usize,
    q: usize,
) -> Result<Vec<MaskedVector>> {
    let pre = crate::dataset::preprocess(record, downsample_window, false)?;
    let frames: Vec<MaskedVector> = pre[0]
        .frames
        .iter()
        .map(pose_feature)
        .filter(|f| !f.is_fully_masked())
        .collect();
    if frames.len() < q {
        return Err(Error::SequenceTooShort {
            id: record.id.clone(),
            len: frames.len(),
            q,
        });
    }
    Ok(frames)
}

fn encode_objects(record: &SequenceRecord, codebook: &Codebook) -> Result<Vec<(usize, VladCode)>> {
    record
        .objects
        .iter()
        .map(|o| Ok((o.category, vlad_encode(codebook, &o.descriptors)?)))
        .collect()
}

/// Builds the object label vector for one sequence according to the
/// configured mode. The flag reports the all-zero fallback.
fn object_label_vector(
    mode: ObjectLabelMode,
    allow_missing: bool,
    c: usize,
    gwr_o: &GwrNetwork,
    histograms: &ClassHistograms,
    codes: &[(usize, VladCode)],
) -> Result<(ObjectLabelVector, bool)> {
    let fallback = |reason: &str| {
        if allow_missing {
            log::debug!("object label fallback: {reason}");
            Ok((ObjectLabelVector::zeros(c), true))
        } else {
            Err(Error::InvalidDataset(format!(
                "sequence carries no usable object: {reason}"
            )))
        }
    };
    match mode {
        ObjectLabelMode::Zeroed => Ok((ObjectLabelVector::zeros(c), false)),
        ObjectLabelMode::GroundTruth => {
            if codes.is_empty() {
                return fallback("no object instances");
            }
            let cats: Vec<usize> = codes.iter().map(|(cat, _)| *cat).collect();
            Ok((merge_object_labels(&cats, c)?, false))
        }
        ObjectLabelMode::Votes => {
            if codes.is_empty() {
                return fallback("no object instances");
            }
            let mut votes = Vec::new();
            for (_, code) in codes {
                match classify_sequence(gwr_o, histograms, &[code.values.clone()]) {
                    Ok((category, _)) => votes.push(category),
                    Err(Error::Unclassifiable) => {}
                    Err(e) => return Err(e),
                }
            }
            if votes.is_empty() {
                return fallback("no object view reached a labeled prototype");
            }
            Ok((merge_object_labels(&votes, c)?, false))
        }
    }
}

/// Trains the whole hierarchy on a dataset. Deterministic for fixed seeds.
pub fn train_architecture(dataset: &Dataset, config: &ArchitectureConfig) -> Result<TrainedModel> {
    config.validate()?;
    dataset.validate()?;
    let c = dataset.manifest.object_categories.len();
    if config.category_count != 0 && config.category_count != c {
        return Err(Error::InvalidParameter(format!(
            "config expects {} object categories but the dataset defines {c}",
            config.category_count
        )));
    }
    if dataset.records.is_empty() {
        return Err(Error::EmptyData);
    }

    // Preprocess (with optional mirror augmentation) once, up front.
    let mut records: Vec<SequenceRecord> = Vec::new();
    for r in &dataset.records {
        records.extend(crate::dataset::preprocess(
            r,
            config.downsample_window,
            config.mirror_augment,
        )?);
    }

    // Stage 1: pose features and the body network.
    let mut per_record_frames: Vec<Vec<MaskedVector>> = Vec::with_capacity(records.len());
    for r in &records {
        let frames: Vec<MaskedVector> = r
            .frames
            .iter()
            .map(pose_feature)
            .filter(|f| !f.is_fully_masked())
            .collect();
        if frames.len() < config.window_q {
            return Err(Error::SequenceTooShort {
                id: r.id.clone(),
                len: frames.len(),
                q: config.window_q,
            });
        }
        per_record_frames.push(frames);
    }
    let pose_data: Vec<MaskedVector> = per_record_frames.iter().flatten().cloned().collect();
    let gwr_b = GwrNetwork::train(config.gwr_b.clone(), &pose_data)?;
    log::info!("body network trained: {} neurons", gwr_b.neuron_count());

    // Stage 2: codebook, VLAD codes, object network, object labels.
    let all_descriptors: Vec<Vec<f64>> = records
        .iter()
        .flat_map(|r| r.objects.iter().flat_map(|o| o.descriptors.clone()))
        .collect();
    if all_descriptors.is_empty() {
        return Err(Error::InvalidDataset(
            "training data carries no object descriptors".into(),
        ));
    }
    let codebook = fit_codebook(&all_descriptors, config.codebook_k, config.codebook_seed)?;
    let mut per_record_codes: Vec<Vec<(usize, VladCode)>> = Vec::with_capacity(records.len());
    for r in &records {
        if r.objects.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "training sequence {:?} has no object descriptors",
                r.id
            )));
        }
        per_record_codes.push(encode_objects(r, &codebook)?);
    }
    let object_samples: Vec<MaskedVector> = per_record_codes
        .iter()
        .flatten()
        .map(|(_, code)| MaskedVector::dense(code.values.clone()))
        .collect();
    let gwr_o = GwrNetwork::train(config.gwr_o.clone(), &object_samples)?;
    let labeled_objects: Vec<(Vec<f64>, usize)> = per_record_codes
        .iter()
        .flatten()
        .map(|(cat, code)| (code.values.clone(), *cat))
        .collect();
    let (object_histograms, object_stats) = attach_labels(&gwr_o, &labeled_objects, c)?;
    log::info!("object network trained: {} neurons", gwr_o.neuron_count());

    // Stage 3: PCA over the body prototypes.
    let weights: Vec<Vec<f64>> = gwr_b.neurons().map(|n| n.weight.clone()).collect();
    let pca = fit_pca(&weights, config.pca_variance_target, config.pca_max_dim)?;

    // Stage 4: trajectory windows joined with object label vectors.
    let mut integration: Vec<(Vec<f64>, usize)> = Vec::new();
    for ((r, frames), codes) in records
        .iter()
        .zip(&per_record_frames)
        .zip(&per_record_codes)
    {
        let segments = encode_trajectories(&gwr_b, &pca, frames, config.window_q)?;
        let (label_vec, _fallback) = object_label_vector(
            config.label_mode,
            config.allow_missing_objects,
            c,
            &gwr_o,
            &object_histograms,
            codes,
        )?;
        let phis = build_integration_set(&segments, &label_vec, Some(r.activity))?;
        integration.extend(phis.into_iter().map(|p| (p.values, r.activity)));
    }

    // Stage 5: the integration network.
    let integration_samples: Vec<MaskedVector> = integration
        .iter()
        .map(|(v, _)| MaskedVector::dense(v.clone()))
        .collect();
    let gwr_a = GwrNetwork::train(config.gwr_a.clone(), &integration_samples)?;
    log::info!("integration network trained: {} neurons", gwr_a.neuron_count());

    // Stage 6: activity labels.
    let (activity_histograms, activity_stats) =
        attach_labels(&gwr_a, &integration, dataset.manifest.activities.len())?;

    let model = TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        config: config.clone(),
        object_categories: dataset.manifest.object_categories.clone(),
        activities: dataset.manifest.activities.clone(),
        gwr_b,
        gwr_o,
        gwr_a,
        pca,
        codebook,
        object_histograms,
        object_stats,
        activity_histograms,
        activity_stats,
    };
    model.validate()?;
    Ok(model)
}

/// Winner and activation of the integration network for one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentTrace {
    /// Index of the window's newest frame in the encoded sequence.
    pub frame_index: usize,
    pub bmu: NeuronId,
    pub activation: f64,
}

/// Outcome of classifying one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityDecision {
    pub activity: usize,
    /// Accumulated histogram scores per activity.
    pub scores: Vec<f64>,
    pub trace: Vec<SegmentTrace>,
    pub object_label: ObjectLabelVector,
    /// Set when the all-zero object fallback was taken.
    pub object_fallback: bool,
}

struct SequenceRun {
    trace: Vec<SegmentTrace>,
    object_label: ObjectLabelVector,
    object_fallback: bool,
}

fn run_sequence(model: &TrainedModel, record: &SequenceRecord) -> Result<SequenceRun> {
    let cfg = &model.config;
    let frames = prepare_frames(record, cfg.downsample_window, cfg.window_q)?;
    let codes = encode_objects(record, &model.codebook)?;
    let (object_label, object_fallback) = object_label_vector(
        cfg.label_mode,
        cfg.allow_missing_objects,
        model.category_count(),
        &model.gwr_o,
        &model.object_histograms,
        &codes,
    )?;
    let segments = encode_trajectories(&model.gwr_b, &model.pca, &frames, cfg.window_q)?;
    let phis = build_integration_set(&segments, &object_label, None)?;
    let mut trace = Vec::with_capacity(phis.len());
    for phi in &phis {
        let m = model.gwr_a.find_bmus(&phi.values, None)?;
        trace.push(SegmentTrace {
            frame_index: phi.frame_index,
            bmu: m.bmu,
            activation: (-m.distance).exp(),
        });
    }
    Ok(SequenceRun {
        trace,
        object_label,
        object_fallback,
    })
}

/// Classifies a sequence end to end: pose windows through the body network
/// and PCA, objects through VLAD and the object network, the joint segments
/// through the integration network's majority vote.
pub fn classify_activity(model: &TrainedModel, record: &SequenceRecord) -> Result<ActivityDecision> {
    let run = run_sequence(model, record)?;
    let mut scores = vec![0.0; model.activities.len()];
    for t in &run.trace {
        if let Some(h) = model.activity_histograms.get(t.bmu) {
            for (s, v) in scores.iter_mut().zip(h) {
                *s += v;
            }
        }
    }
    if scores.iter().all(|&s| s <= 0.0) {
        return Err(Error::Unclassifiable);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(ActivityDecision {
        activity: best,
        scores,
        trace: run.trace,
        object_label: run.object_label,
        object_fallback: run.object_fallback,
    })
}

/// Per-segment winner data without the classification vote; defined even
/// when no winner carries a histogram.
pub fn segment_traces(model: &TrainedModel, record: &SequenceRecord) -> Result<Vec<SegmentTrace>> {
    Ok(run_sequence(model, record)?.trace)
}

/// Integration-network activation per action-object segment, in `(0, 1]`.
pub fn activation_trace(model: &TrainedModel, record: &SequenceRecord) -> Result<Vec<f64>> {
    Ok(segment_traces(model, record)?
        .iter()
        .map(|t| t.activation)
        .collect())
}

/// CSV rows for a segment trace: `segment,activation,bmu`.
pub fn trace_to_csv(trace: &[SegmentTrace]) -> String {
    let mut out = String::from("segment,activation,bmu\n");
    for t in trace {
        out.push_str(&format!("{},{:.9},{}\n", t.frame_index, t.activation, t.bmu));
    }
    out
}

/// Swaps a sequence's objects for the given replacements, leaving the pose
/// untouched. Errors when the replacement category set equals the original.
pub fn make_incongruent(
    record: &SequenceRecord,
    replacements: &[ObjectInstance],
) -> Result<SequenceRecord> {
    if replacements.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut new_cats: Vec<usize> = replacements.iter().map(|o| o.category).collect();
    new_cats.sort_unstable();
    new_cats.dedup();
    if new_cats == record.category_set() {
        return Err(Error::InvalidParameter(
            "replacement categories equal the original category set".into(),
        ));
    }
    Ok(SequenceRecord {
        objects: replacements.to_vec(),
        ..record.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongruencePair {
    pub id: String,
    pub congruent_mean: f64,
    pub incongruent_mean: f64,
}

impl CongruencePair {
    pub fn difference(&self) -> f64 {
        self.congruent_mean - self.incongruent_mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongruenceReport {
    pub pairs: Vec<CongruencePair>,
    /// Fraction of pairs whose congruent member activates higher.
    pub fraction_congruent_higher: f64,
}

impl CongruenceReport {
    /// CSV rows: `sequence,congruent_mean,incongruent_mean,difference`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sequence,congruent_mean,incongruent_mean,difference\n");
        for p in &self.pairs {
            out.push_str(&format!(
                "{},{:.9},{:.9},{:.9}\n",
                p.id,
                p.congruent_mean,
                p.incongruent_mean,
                p.difference()
            ));
        }
        out
    }
}

/// Compares mean integration activation across paired congruent and
/// incongruent samples (same pose, swapped objects).
pub fn congruence_compare(
    model: &TrainedModel,
    congruent: &[SequenceRecord],
    incongruent: &[SequenceRecord],
) -> Result<CongruenceReport> {
    if congruent.len() != incongruent.len() {
        return Err(Error::DimensionMismatch {
            expected: congruent.len(),
            got: incongruent.len(),
        });
    }
    if congruent.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut pairs = Vec::with_capacity(congruent.len());
    let mut higher = 0usize;
    for (c, i) in congruent.iter().zip(incongruent) {
        if c.id != i.id {
            return Err(Error::InvalidParameter(format!(
                "unpaired inputs: {:?} vs {:?}",
                c.id, i.id
            )));
        }
        let mean = |r: &SequenceRecord| -> Result<f64> {
            let t = activation_trace(model, r)?;
            Ok(t.iter().sum::<f64>() / t.len() as f64)
        };
        let congruent_mean = mean(c)?;
        let incongruent_mean = mean(i)?;
        if congruent_mean > incongruent_mean {
            higher += 1;
        }
        pairs.push(CongruencePair {
            id: c.id.clone(),
            congruent_mean,
            incongruent_mean,
        });
    }
    let fraction_congruent_higher = higher as f64 / congruent.len() as f64;
    Ok(CongruenceReport {
        pairs,
        fraction_congruent_higher,
    })
}
