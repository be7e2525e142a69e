//! Hierarchical grow-when-required networks for recognizing human-object
//! interactions.
//!
//! The stack has three self-organizing layers: a body network quantizes
//! similarity-invariant skeletal-quad pose features, an object network
//! quantizes VLAD codes of object descriptor sets, and an integration
//! network learns windows of PCA-projected pose prototypes joined with
//! multi-hot object label vectors. Prototypes gain class histograms by a
//! frequency-normalized majority vote, which keeps the learning itself
//! unsupervised.
//!
//! Modules:
//! - [`gwr`] — the growing network core
//! - [`features`] — skeletal quads and VLAD encoding
//! - [`temporal`] — PCA, sliding windows, action-object segments
//! - [`labeling`] — histogram labeling and sequence voting
//! - [`pipeline`] — layer-wise training, classification, congruence analysis
//! - [`eval`] — cross-validation splits and metrics
//! - [`dataset`], [`synth`], [`model_io`] — persistence and data generation

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod gwr;
pub mod labeling;
pub mod model_io;
pub mod pipeline;
pub mod synth;
pub mod temporal;

pub use error::{Error, Result};
pub use gwr::{GwrNetwork, GwrParams, MaskedVector, NeuronId};
pub use pipeline::{
    classify_activity, train_architecture, ArchitectureConfig, ObjectLabelMode, TrainedModel,
};
