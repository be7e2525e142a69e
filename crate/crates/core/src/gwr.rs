//! Grow-When-Required network: an online vector quantizer that inserts
//! neurons wherever the current prototypes respond too weakly to the input.
//!
//! A network holds prototype neurons with habituation counters and a set of
//! aged edges. Each training step finds the two best-matching units, refreshes
//! their shared edge, and either inserts a new neuron (when the best match is
//! both weakly activated and well trained) or adapts prototypes toward the
//! input. Edges incident to the winner age every step; stale edges and
//! neurons left without edges are pruned.
//!
//! Inputs may carry a per-component mask so that distances, adaptation, and
//! insertion only involve observed components.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stable neuron identifier, assigned in creation order and never reused.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NeuronId(pub u64);

impl std::fmt::Display for NeuronId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Growth and adaptation constants for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwrParams {
    /// Activity level below which the network may grow (`a_T`).
    pub insertion_threshold: f64,
    /// Habituation level below which the winner counts as well trained (`f_T`).
    pub firing_threshold: f64,
    /// Learning rate for the best-matching unit.
    pub learn_rate_bmu: f64,
    /// Learning rate for the winner's topological neighbors.
    pub learn_rate_neighbor: f64,
    /// Habituation speed of the winner.
    pub tau_bmu: f64,
    /// Habituation speed of the winner's neighbors.
    pub tau_neighbor: f64,
    /// Curvature of the habituation curve; must exceed 1.
    pub kappa: f64,
    /// Edges older than this are removed.
    pub max_edge_age: u32,
    /// Passes over the training set.
    pub epochs: u32,
    /// Seed for presentation order and prototype initialization.
    pub rng_seed: u64,
}

impl Default for GwrParams {
    fn default() -> Self {
        Self {
            insertion_threshold: 0.98,
            firing_threshold: 0.1,
            learn_rate_bmu: 0.1,
            learn_rate_neighbor: 0.01,
            tau_bmu: 0.3,
            tau_neighbor: 0.1,
            kappa: 1.05,
            max_edge_age: 100,
            epochs: 300,
            rng_seed: 0,
        }
    }
}

impl GwrParams {
    /// Checks the parameter invariants, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.insertion_threshold > 0.0 && self.insertion_threshold <= 1.0) {
            return fail(format!(
                "insertion_threshold must be in (0,1], got {}",
                self.insertion_threshold
            ));
        }
        if !(self.firing_threshold > 0.0 && self.firing_threshold < 1.0) {
            return fail(format!(
                "firing_threshold must be in (0,1), got {}",
                self.firing_threshold
            ));
        }
        if !(self.learn_rate_neighbor > 0.0
            && self.learn_rate_neighbor <= self.learn_rate_bmu
            && self.learn_rate_bmu < 1.0)
        {
            return fail(format!(
                "need 0 < learn_rate_neighbor <= learn_rate_bmu < 1, got {} and {}",
                self.learn_rate_neighbor, self.learn_rate_bmu
            ));
        }
        if !(self.tau_neighbor > 0.0 && self.tau_neighbor <= self.tau_bmu) {
            return fail(format!(
                "need 0 < tau_neighbor <= tau_bmu, got {} and {}",
                self.tau_neighbor, self.tau_bmu
            ));
        }
        if !(self.kappa > 1.0) {
            return fail(format!("kappa must exceed 1, got {}", self.kappa));
        }
        if self.max_edge_age == 0 {
            return fail("max_edge_age must be positive".into());
        }
        if self.epochs == 0 {
            return fail("epochs must be positive".into());
        }
        Ok(())
    }

    /// The habituation fixed point `1 - 1/kappa`.
    pub fn habituation_floor(&self) -> f64 {
        1.0 - 1.0 / self.kappa
    }

    /// Non-fatal configuration findings worth logging.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.firing_threshold < self.habituation_floor() {
            out.push(format!(
                "firing_threshold {} lies below the habituation floor {:.6}; \
                 neuron insertion becomes unreachable once counters settle",
                self.firing_threshold,
                self.habituation_floor()
            ));
        }
        out
    }
}

/// A prototype neuron: weight vector plus habituation counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub id: NeuronId,
    pub weight: Vec<f64>,
    /// In `[0, 1]`; starts at 1 (novel) and decays toward `1 - 1/kappa`.
    pub habituation: f64,
}

/// Undirected edge between two neurons, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: NeuronId,
    pub b: NeuronId,
    pub age: u32,
}

impl Edge {
    fn touches(&self, id: NeuronId) -> bool {
        self.a == id || self.b == id
    }
}

/// An input vector with an optional per-component observation mask.
///
/// `None` means fully observed. Masked components are ignored by distance
/// computations and left untouched by weight updates.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedVector {
    pub values: Vec<f64>,
    pub mask: Option<Vec<bool>>,
}

impl MaskedVector {
    pub fn dense(values: Vec<f64>) -> Self {
        Self { values, mask: None }
    }

    pub fn with_mask(values: Vec<f64>, mask: Vec<bool>) -> Self {
        Self {
            values,
            mask: Some(mask),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn mask_slice(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn observed_count(&self) -> usize {
        match &self.mask {
            None => self.values.len(),
            Some(m) => m.iter().filter(|&&b| b).count(),
        }
    }

    pub fn is_fully_masked(&self) -> bool {
        self.observed_count() == 0
    }

    pub fn is_fully_observed(&self) -> bool {
        self.observed_count() == self.values.len()
    }
}

/// Euclidean distance over observed components only (unscaled).
pub fn masked_distance(a: &[f64], b: &[f64], mask: Option<&[bool]>) -> f64 {
    let sum: f64 = match mask {
        None => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum(),
        Some(m) => a
            .iter()
            .zip(b)
            .zip(m)
            .filter(|&(_, &obs)| obs)
            .map(|((x, y), _)| (x - y) * (x - y))
            .sum(),
    };
    sum.sqrt()
}

/// Network activity for a winner at the given distance: `exp(-distance)`.
pub fn activation(distance: f64) -> Result<f64> {
    if distance < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "distance must be non-negative, got {distance}"
        )));
    }
    Ok((-distance).exp())
}

/// One habituation update: `h + tau * kappa * (1 - h) - tau`, clamped to `[0, 1]`.
pub fn habituate(h: f64, tau: f64, kappa: f64) -> f64 {
    (h + tau * kappa * (1.0 - h) - tau).clamp(0.0, 1.0)
}

/// Result of a best-match search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmuMatch {
    pub bmu: NeuronId,
    pub second: NeuronId,
    /// Distance from the input to the best-matching unit.
    pub distance: f64,
}

/// What a single training step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub bmu: NeuronId,
    pub second: NeuronId,
    pub distance: f64,
    pub activity: f64,
    /// Habituation of the winner before this step touched it.
    pub bmu_habituation: f64,
    /// Id of the neuron inserted by this step, if any.
    pub inserted: Option<NeuronId>,
}

/// A Grow-When-Required network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwrNetwork {
    input_dim: usize,
    params: GwrParams,
    /// Sorted by id ascending; ids are never reused.
    neurons: Vec<Neuron>,
    /// Sorted by `(a, b)`; at most one edge per pair.
    edges: Vec<Edge>,
    next_id: u64,
}

impl GwrNetwork {
    /// Creates a network from two seed prototypes (habituation 1, no edges).
    pub fn with_seed_weights(params: GwrParams, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if w1.is_empty() {
            return Err(Error::EmptyData);
        }
        if w1.len() != w2.len() {
            return Err(Error::DimensionMismatch {
                expected: w1.len(),
                got: w2.len(),
            });
        }
        let input_dim = w1.len();
        Ok(Self {
            input_dim,
            params,
            neurons: vec![
                Neuron {
                    id: NeuronId(0),
                    weight: w1,
                    habituation: 1.0,
                },
                Neuron {
                    id: NeuronId(1),
                    weight: w2,
                    habituation: 1.0,
                },
            ],
            edges: Vec::new(),
            next_id: 2,
        })
    }

    /// Creates an untrained network holding the given prototypes verbatim.
    ///
    /// Useful as a fixed quantizer; note that training prunes prototypes that
    /// never gain an edge.
    pub fn from_prototypes(params: GwrParams, weights: Vec<Vec<f64>>) -> Result<Self> {
        params.validate()?;
        if weights.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a network needs at least 2 neurons, got {}",
                weights.len()
            )));
        }
        let input_dim = weights[0].len();
        if input_dim == 0 {
            return Err(Error::EmptyData);
        }
        for w in &weights {
            if w.len() != input_dim {
                return Err(Error::DimensionMismatch {
                    expected: input_dim,
                    got: w.len(),
                });
            }
        }
        let neurons: Vec<Neuron> = weights
            .into_iter()
            .enumerate()
            .map(|(i, weight)| Neuron {
                id: NeuronId(i as u64),
                weight,
                habituation: 1.0,
            })
            .collect();
        let next_id = neurons.len() as u64;
        Ok(Self {
            input_dim,
            params,
            neurons,
            edges: Vec::new(),
            next_id,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn params(&self) -> &GwrParams {
        &self.params
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn neurons(&self) -> impl Iterator<Item = &Neuron> {
        self.neurons.iter()
    }

    pub fn neuron(&self, id: NeuronId) -> Option<&Neuron> {
        self.index_of(id).map(|i| &self.neurons[i])
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Ids of neurons sharing an edge with `id`, ascending.
    pub fn neighbors(&self, id: NeuronId) -> Vec<NeuronId> {
        let mut out: Vec<NeuronId> = self
            .edges
            .iter()
            .filter(|e| e.touches(id))
            .map(|e| if e.a == id { e.b } else { e.a })
            .collect();
        out.sort();
        out
    }

    fn index_of(&self, id: NeuronId) -> Option<usize> {
        self.neurons.binary_search_by_key(&id, |n| n.id).ok()
    }

    fn check_input(&self, x: &[f64], mask: Option<&[bool]>) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        if let Some(m) = mask {
            if m.len() != self.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim,
                    got: m.len(),
                });
            }
            if !m.iter().any(|&b| b) {
                return Err(Error::AllMasked);
            }
        }
        Ok(())
    }

    /// Finds the best and second-best matching units for `x`.
    ///
    /// Ties break toward the lower neuron id.
    pub fn find_bmus(&self, x: &[f64], mask: Option<&[bool]>) -> Result<BmuMatch> {
        self.check_input(x, mask)?;
        debug_assert!(self.neurons.len() >= 2);
        let mut best: Option<(usize, f64)> = None;
        let mut second: Option<(usize, f64)> = None;
        for (i, n) in self.neurons.iter().enumerate() {
            let d = masked_distance(&n.weight, x, mask);
            match best {
                Some((_, bd)) if d >= bd => match second {
                    Some((_, sd)) if d >= sd => {}
                    _ => second = Some((i, d)),
                },
                _ => {
                    second = best;
                    best = Some((i, d));
                }
            }
        }
        let (bi, bd) = best.expect("network holds at least two neurons");
        let (si, _) = second.expect("network holds at least two neurons");
        Ok(BmuMatch {
            bmu: self.neurons[bi].id,
            second: self.neurons[si].id,
            distance: bd,
        })
    }

    /// Runs one training step on the input, mutating the network.
    pub fn train_step(&mut self, x: &[f64], mask: Option<&[bool]>) -> Result<StepReport> {
        let found = self.find_bmus(x, mask)?;
        let BmuMatch { bmu, second, distance } = found;
        let activity = (-distance).exp();

        self.touch_edge(bmu, second);

        let bmu_habituation = self.neuron(bmu).expect("bmu exists").habituation;
        let p = self.params.clone();

        let inserted = if activity < p.insertion_threshold && bmu_habituation < p.firing_threshold
        {
            // Grow: place a neuron midway between the winner and the input
            // and rewire it into the winner pair.
            let bw = self.neuron(bmu).expect("bmu exists").weight.clone();
            let weight = midpoint_masked(&bw, x, mask);
            let id = NeuronId(self.next_id);
            self.next_id += 1;
            self.neurons.push(Neuron {
                id,
                weight,
                habituation: 1.0,
            });
            self.remove_edge(bmu, second);
            self.touch_edge(id, bmu);
            self.touch_edge(id, second);
            log::debug!(
                "inserted neuron {id} (activity {activity:.4}, winner habituation {bmu_habituation:.4})"
            );
            Some(id)
        } else {
            // Adapt the winner and its neighbors, then habituate them.
            // Weight deltas use the pre-update habituation values.
            let neighbors = self.neighbors(bmu);
            {
                let i = self.index_of(bmu).expect("bmu exists");
                let n = &mut self.neurons[i];
                adapt_weight(&mut n.weight, x, mask, p.learn_rate_bmu * n.habituation);
                n.habituation = habituate(n.habituation, p.tau_bmu, p.kappa);
            }
            for id in neighbors {
                let i = self.index_of(id).expect("neighbor exists");
                let n = &mut self.neurons[i];
                adapt_weight(
                    &mut n.weight,
                    x,
                    mask,
                    p.learn_rate_neighbor * n.habituation,
                );
                n.habituation = habituate(n.habituation, p.tau_neighbor, p.kappa);
            }
            None
        };

        // Age edges incident to the winner, then prune.
        for e in &mut self.edges {
            if e.touches(bmu) {
                e.age += 1;
            }
        }
        self.prune(p.max_edge_age);

        Ok(StepReport {
            bmu,
            second,
            distance,
            activity,
            bmu_habituation,
            inserted,
        })
    }

    /// Trains a fresh network: prototypes are seeded from two distinct
    /// samples, then `epochs` shuffled passes run over the data. Fully
    /// deterministic for a given seed.
    pub fn train(params: GwrParams, data: &[MaskedVector]) -> Result<Self> {
        params.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        let dim = data[0].dim();
        for s in data {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
            if let Some(m) = &s.mask {
                if m.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: m.len(),
                    });
                }
            }
            if s.is_fully_masked() {
                return Err(Error::AllMasked);
            }
        }
        for w in params.warnings() {
            log::warn!("{w}");
        }

        let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        let fill = component_means(data, dim);
        let complete = |s: &MaskedVector| -> Vec<f64> {
            match &s.mask {
                None => s.values.clone(),
                Some(m) => s
                    .values
                    .iter()
                    .zip(m)
                    .enumerate()
                    .map(|(i, (&v, &obs))| if obs { v } else { fill[i] })
                    .collect(),
            }
        };

        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        let mut seeds: Vec<Vec<f64>> = Vec::with_capacity(2);
        'outer: for pass in 0..2 {
            for &i in &order {
                if pass == 0 && !data[i].is_fully_observed() {
                    continue;
                }
                let w = complete(&data[i]);
                if !seeds.contains(&w) {
                    seeds.push(w);
                    if seeds.len() == 2 {
                        break 'outer;
                    }
                }
            }
        }
        if seeds.len() < 2 {
            return Err(Error::InvalidDataset(
                "training data holds fewer than 2 distinct samples".into(),
            ));
        }
        let w2 = seeds.pop().expect("two seeds");
        let w1 = seeds.pop().expect("two seeds");
        let mut net = Self::with_seed_weights(params.clone(), w1, w2)?;

        let mut idx: Vec<usize> = (0..data.len()).collect();
        for _ in 0..params.epochs {
            idx.shuffle(&mut rng);
            for &i in &idx {
                net.train_step(&data[i].values, data[i].mask_slice())?;
            }
        }
        Ok(net)
    }

    /// Mean distance from each sample to its best-matching unit.
    pub fn quantization_error(&self, data: &[MaskedVector]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut sum = 0.0;
        for s in data {
            sum += self.find_bmus(&s.values, s.mask_slice())?.distance;
        }
        Ok(sum / data.len() as f64)
    }

    fn edge_position(&self, a: NeuronId, b: NeuronId) -> std::result::Result<usize, usize> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search_by_key(&(lo, hi), |e| (e.a, e.b))
    }

    /// Creates the edge `a-b` or resets its age to 0.
    fn touch_edge(&mut self, a: NeuronId, b: NeuronId) {
        debug_assert_ne!(a, b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        match self.edge_position(lo, hi) {
            Ok(i) => self.edges[i].age = 0,
            Err(i) => self.edges.insert(i, Edge { a: lo, b: hi, age: 0 }),
        }
    }

    fn remove_edge(&mut self, a: NeuronId, b: NeuronId) {
        if let Ok(i) = self.edge_position(a, b) {
            self.edges.remove(i);
        }
    }

    /// Drops stale edges, then neurons left without edges (floor of 2 kept).
    ///
    /// Isolation can only result from an edge removal (the insertion rewire
    /// keeps both endpoints connected), so the neuron sweep runs only when
    /// aging actually removed something.
    fn prune(&mut self, max_age: u32) {
        let before = self.edges.len();
        self.edges.retain(|e| e.age <= max_age);
        if self.edges.len() == before || self.neurons.len() <= 2 {
            return;
        }
        let connected: BTreeSet<NeuronId> = self
            .edges
            .iter()
            .flat_map(|e| [e.a, e.b])
            .collect();
        let isolated: Vec<NeuronId> = self
            .neurons
            .iter()
            .map(|n| n.id)
            .filter(|id| !connected.contains(id))
            .collect();
        for id in isolated {
            if self.neurons.len() <= 2 {
                break;
            }
            if let Some(i) = self.index_of(id) {
                self.neurons.remove(i);
            }
        }
    }
}

fn adapt_weight(w: &mut [f64], x: &[f64], mask: Option<&[bool]>, rate: f64) {
    for i in 0..w.len() {
        if mask.map_or(true, |m| m[i]) {
            w[i] += rate * (x[i] - w[i]);
        }
    }
}

/// Midpoint of `w` and `x` on observed components; `w` elsewhere.
fn midpoint_masked(w: &[f64], x: &[f64], mask: Option<&[bool]>) -> Vec<f64> {
    (0..w.len())
        .map(|i| {
            if mask.map_or(true, |m| m[i]) {
                0.5 * (w[i] + x[i])
            } else {
                w[i]
            }
        })
        .collect()
}

fn component_means(data: &[MaskedVector], dim: usize) -> Vec<f64> {
    let mut sums = vec![0.0; dim];
    let mut counts = vec![0usize; dim];
    for s in data {
        for i in 0..dim {
            if s.mask.as_ref().map_or(true, |m| m[i]) {
                sums[i] += s.values[i];
                counts[i] += 1;
            }
        }
    }
    (0..dim)
        .map(|i| if counts[i] > 0 { sums[i] / counts[i] as f64 } else { 0.0 })
        .collect()
}
