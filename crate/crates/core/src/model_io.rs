//! Trained-model persistence.
//!
//! A model file is UTF-8 JSON in two lines: the model payload (which carries
//! its own `format_version`) followed by a trailer holding the SHA-256 of the
//! payload bytes. Loading verifies the checksum before touching the payload,
//! so corruption and truncation surface as one explicit error. Files are
//! written atomically (temp file, then rename).

use std::fs;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{TrainedModel, MODEL_FORMAT_VERSION};

#[derive(serde::Serialize, Deserialize)]
struct Trailer {
    checksum_sha256: String,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

fn digest(payload: &[u8]) -> String {
    hex::encode(Sha256::digest(payload))
}

/// Serializes and writes a model.
pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    model.validate()?;
    let payload = serde_json::to_string(model)?;
    let trailer = serde_json::to_string(&Trailer {
        checksum_sha256: digest(payload.as_bytes()),
    })?;
    let mut contents = payload;
    contents.push('\n');
    contents.push_str(&trailer);
    contents.push('\n');

    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads a model, verifying checksum, format version, and the dimensional
/// chain.
pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let contents = fs::read_to_string(path)?;
    let (payload, trailer_text) = contents
        .split_once('\n')
        .ok_or(Error::ChecksumMismatch)?;
    let trailer: Trailer =
        serde_json::from_str(trailer_text.trim_end()).map_err(|_| Error::ChecksumMismatch)?;
    if digest(payload.as_bytes()) != trailer.checksum_sha256 {
        return Err(Error::ChecksumMismatch);
    }
    let probe: VersionProbe = serde_json::from_str(payload)?;
    if probe.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: probe.format_version,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let model: TrainedModel = serde_json::from_str(payload)?;
    model.validate()?;
    Ok(model)
}

/// Saves then reloads a model; the reloaded copy must behave identically.
pub fn model_roundtrip(path: &Path, model: &TrainedModel) -> Result<TrainedModel> {
    save_model(path, model)?;
    load_model(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{train_architecture, ArchitectureConfig};
    use crate::synth::{synth_generate, ActivityDef, CategoryDef, KeyPose, SynthSpec};
    use crate::gwr::GwrParams;
    use tempfile::tempdir;

    fn pose(y: f64) -> KeyPose {
        let mut p = [[0.0; 3]; 9];
        for (j, row) in p.iter_mut().enumerate() {
            *row = [0.1 * j as f64 - 0.4, y + 0.05 * j as f64, 0.1];
        }
        p[1] = [0.0, 0.55, 0.0];
        p[2] = [0.0, 0.25, 0.0];
        p
    }

    fn model() -> TrainedModel {
        let spec = SynthSpec {
            seed: 3,
            descriptor_dim: 3,
            subjects: 2,
            repetitions: 2,
            subject_scale: (1.0, 1.0),
            subject_offset: (0.0, 0.0),
            pose_noise_sigma: 0.01,
            views_per_instance: 1,
            descriptors_per_view: 5,
            object_categories: vec![
                CategoryDef {
                    name: "a".into(),
                    descriptor_mean: vec![0.0, 0.0, 1.0],
                    descriptor_sigma: 0.05,
                },
                CategoryDef {
                    name: "b".into(),
                    descriptor_mean: vec![1.0, 0.0, 0.0],
                    descriptor_sigma: 0.05,
                },
            ],
            activities: vec![
                ActivityDef {
                    name: "up".into(),
                    categories: vec![0],
                    frames_per_repetition: 12,
                    keyposes: vec![pose(0.0), pose(0.4)],
                },
                ActivityDef {
                    name: "down".into(),
                    categories: vec![1],
                    frames_per_repetition: 12,
                    keyposes: vec![pose(0.4), pose(0.0)],
                },
            ],
        };
        let ds = synth_generate(&spec).unwrap();
        let fast = GwrParams {
            epochs: 30,
            ..GwrParams::default()
        };
        let config = ArchitectureConfig {
            gwr_b: fast.clone(),
            gwr_o: GwrParams { rng_seed: 2, ..fast.clone() },
            gwr_a: GwrParams { rng_seed: 3, insertion_threshold: 0.9, ..fast },
            window_q: 2,
            codebook_k: 2,
            ..ArchitectureConfig::default()
        };
        train_architecture(&ds, &config).unwrap()
    }

    #[test]
    fn roundtrip_is_exact() {
        let m = model();
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let loaded = model_roundtrip(&path, &m).unwrap();
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            serde_json::to_string(&loaded).unwrap()
        );
    }

    #[test]
    fn truncation_is_detected() {
        let m = model();
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &m).unwrap();
        let contents = std::fs::read(&path).unwrap();
        std::fs::write(&path, &contents[..contents.len() / 2]).unwrap();
        assert!(matches!(load_model(&path), Err(Error::ChecksumMismatch)));
    }

    #[test]
    fn corruption_is_detected() {
        let m = model();
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &m).unwrap();
        let mut contents = std::fs::read_to_string(&path).unwrap();
        // Flip one digit inside the payload.
        let pos = contents.find("0.").map(|p| p + 2).unwrap();
        let original = contents.as_bytes()[pos];
        let replacement = if original == b'1' { '2' } else { '1' };
        contents.replace_range(pos..pos + 1, &replacement.to_string());
        std::fs::write(&path, contents).unwrap();
        assert!(matches!(load_model(&path), Err(Error::ChecksumMismatch)));
    }

    #[test]
    fn old_versions_are_rejected_explicitly() {
        let m = model();
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &m).unwrap();
        let contents = std::fs::read_to_string(&path).unwrap();
        let rewritten = contents.replacen("\"format_version\":1", "\"format_version\":0", 1);
        let (payload, _) = rewritten.split_once('\n').unwrap();
        let trailer = serde_json::to_string(&Trailer {
            checksum_sha256: digest(payload.as_bytes()),
        })
        .unwrap();
        std::fs::write(&path, format!("{payload}\n{trailer}\n")).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::UnsupportedVersion { found: 0, .. })
        ));
    }
}
