//! Prototype labeling by frequency-normalized majority vote.
//!
//! After a network is trained and frozen, one pass over labeled data counts
//! which classes each neuron wins. Counts are normalized by inverse class
//! frequency and inverse neuron activation frequency, so rare classes and
//! rarely firing neurons vote with equal weight. Classification sums the
//! histograms of the winners along a sequence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gwr::{GwrNetwork, NeuronId};

/// Normalized per-neuron class histograms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHistograms {
    classes: usize,
    by_neuron: BTreeMap<NeuronId, Vec<f64>>,
}

impl ClassHistograms {
    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Histogram of a neuron, absent when it never fired during labeling.
    pub fn get(&self, id: NeuronId) -> Option<&[f64]> {
        self.by_neuron.get(&id).map(|v| v.as_slice())
    }

    pub fn labeled_neurons(&self) -> usize {
        self.by_neuron.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NeuronId, &[f64])> {
        self.by_neuron.iter().map(|(id, v)| (*id, v.as_slice()))
    }

    /// Multiplies every histogram entry by a positive constant. Votes are
    /// scale-invariant, so classifications are unaffected.
    pub fn scale(&mut self, factor: f64) {
        for hist in self.by_neuron.values_mut() {
            for v in hist.iter_mut() {
                *v *= factor;
            }
        }
    }
}

/// Raw frequencies collected during the labeling pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    /// Labeled samples per class.
    pub class_freq: Vec<u64>,
    /// Times each neuron was the winner.
    pub activation_freq: BTreeMap<NeuronId, u64>,
}

/// Associates frozen-network neurons with normalized class histograms by a
/// single pass over labeled samples.
pub fn attach_labels(
    net: &GwrNetwork,
    labeled: &[(Vec<f64>, usize)],
    classes: usize,
) -> Result<(ClassHistograms, LabelStats)> {
    if labeled.is_empty() {
        return Err(Error::EmptyData);
    }
    if classes == 0 {
        return Err(Error::InvalidParameter("class universe is empty".into()));
    }
    let mut counts: BTreeMap<NeuronId, Vec<u64>> = BTreeMap::new();
    let mut class_freq = vec![0u64; classes];
    let mut activation_freq: BTreeMap<NeuronId, u64> = BTreeMap::new();
    for (x, class) in labeled {
        if *class >= classes {
            return Err(Error::InvalidParameter(format!(
                "label {class} outside the class universe of size {classes}"
            )));
        }
        let m = net.find_bmus(x, None)?;
        counts.entry(m.bmu).or_insert_with(|| vec![0; classes])[*class] += 1;
        class_freq[*class] += 1;
        *activation_freq.entry(m.bmu).or_insert(0) += 1;
    }
    let by_neuron = counts
        .into_iter()
        .map(|(id, raw)| {
            let f_a = activation_freq[&id] as f64;
            let hist = raw
                .iter()
                .enumerate()
                .map(|(c, &count)| {
                    if count == 0 {
                        0.0
                    } else {
                        count as f64 / (class_freq[c] as f64 * f_a)
                    }
                })
                .collect();
            (id, hist)
        })
        .collect();
    Ok((
        ClassHistograms { classes, by_neuron },
        LabelStats {
            class_freq,
            activation_freq,
        },
    ))
}

/// Classifies a sequence of vectors by summing winner histograms.
///
/// Returns the argmax class (ties toward the lower index) and the raw score
/// vector. Winners without histograms contribute nothing; an all-zero score
/// is reported as unclassifiable.
pub fn classify_sequence(
    net: &GwrNetwork,
    histograms: &ClassHistograms,
    segments: &[Vec<f64>],
) -> Result<(usize, Vec<f64>)> {
    if segments.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut scores = vec![0.0; histograms.classes()];
    for x in segments {
        let m = net.find_bmus(x, None)?;
        if let Some(h) = histograms.get(m.bmu) {
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
    Ok((best, scores))
}
