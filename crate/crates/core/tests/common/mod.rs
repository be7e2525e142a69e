//! Shared fixtures: a synthetic activity set with pose-identical activity
//! pairs that differ only in object category, and the matching configuration.

use hoinet::gwr::GwrParams;
use hoinet::pipeline::ArchitectureConfig;
use hoinet::synth::{ActivityDef, CategoryDef, KeyPose, SynthSpec};

// Canonical joint order: head, neck, torso, l/r shoulder, l/r elbow, l/r hand.
pub fn rest_pose() -> KeyPose {
    [
        [0.02, 0.66, 0.01],
        [0.0, 0.55, 0.0],
        [0.0, 0.25, 0.0],
        [-0.18, 0.52, 0.0],
        [0.18, 0.52, 0.0],
        [-0.24, 0.28, 0.02],
        [0.24, 0.28, 0.05],
        [-0.26, 0.05, 0.05],
        [0.26, 0.05, 0.09],
    ]
}

/// Right hand raised toward the mouth.
pub fn raise_pose() -> KeyPose {
    let mut p = rest_pose();
    p[6] = [0.20, 0.40, 0.12]; // right elbow
    p[8] = [0.05, 0.62, 0.14]; // right hand
    p
}

/// Right arm extended sideways.
pub fn sweep_pose() -> KeyPose {
    let mut p = rest_pose();
    p[6] = [0.40, 0.48, 0.02];
    p[8] = [0.58, 0.50, 0.0];
    p
}

fn category(name: &str, hot: usize) -> CategoryDef {
    let mut mean = vec![0.05; 8];
    mean[2 * hot] = 0.9;
    mean[2 * hot + 1] = 0.9;
    CategoryDef {
        name: name.into(),
        descriptor_mean: mean,
        descriptor_sigma: 0.03,
    }
}

/// Four activities where two pose-trajectory pairs are identical and differ
/// only in the manipulated object's category.
pub fn ambiguous_pairs_spec(seed: u64, subjects: usize, repetitions: usize) -> SynthSpec {
    let raise = vec![rest_pose(), raise_pose(), rest_pose()];
    let sweep = vec![rest_pose(), sweep_pose(), sweep_pose(), rest_pose()];
    SynthSpec {
        seed,
        descriptor_dim: 8,
        subjects,
        repetitions,
        subject_scale: (0.9, 1.1),
        subject_offset: (-0.05, 0.05),
        pose_noise_sigma: 0.01,
        views_per_instance: 2,
        descriptors_per_view: 8,
        object_categories: vec![
            category("mug", 0),
            category("snackbar", 1),
            category("handset", 2),
            category("remote", 3),
        ],
        activities: vec![
            ActivityDef {
                name: "sip".into(),
                categories: vec![0],
                frames_per_repetition: 30,
                keyposes: raise.clone(),
            },
            ActivityDef {
                name: "bite".into(),
                categories: vec![1],
                frames_per_repetition: 30,
                keyposes: raise,
            },
            ActivityDef {
                name: "call".into(),
                categories: vec![2],
                frames_per_repetition: 30,
                keyposes: sweep.clone(),
            },
            ActivityDef {
                name: "adjust".into(),
                categories: vec![3],
                frames_per_repetition: 30,
                keyposes: sweep,
            },
        ],
    }
}

/// The paper-style parameter triple with distinct per-network seeds.
pub fn acceptance_config() -> ArchitectureConfig {
    ArchitectureConfig {
        gwr_b: GwrParams {
            rng_seed: 11,
            ..GwrParams::default()
        },
        gwr_o: GwrParams {
            rng_seed: 22,
            ..GwrParams::default()
        },
        gwr_a: GwrParams {
            insertion_threshold: 0.9,
            rng_seed: 33,
            ..GwrParams::default()
        },
        window_q: 5,
        codebook_k: 4,
        codebook_seed: 44,
        ..ArchitectureConfig::default()
    }
}

/// A reduced-epoch configuration for tests whose budgets are tight.
pub fn fast_config() -> ArchitectureConfig {
    let mut cfg = acceptance_config();
    cfg.gwr_b.epochs = 80;
    cfg.gwr_o.epochs = 80;
    cfg.gwr_a.epochs = 80;
    cfg
}
