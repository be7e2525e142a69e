//! Feature encoders: skeletal-quad pose vectors and VLAD object codes.

pub mod pose;
pub mod vlad;

pub use pose::{pose_feature, skeletal_quad, Joint, PoseFrame, QuadFeature, POSE_FEATURE_DIM};
pub use vlad::{fit_codebook, vlad_encode, Codebook, VladCode};
