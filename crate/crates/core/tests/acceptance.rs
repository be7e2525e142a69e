//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hoinet::dataset::SequenceRecord;
use hoinet::eval::{evaluate, make_splits, SplitStrategy};
use hoinet::features::pose::skeletal_quad;
use hoinet::features::vlad::{vlad_encode, Codebook};
use hoinet::gwr::{habituate, masked_distance, GwrNetwork, GwrParams, MaskedVector, NeuronId};
use hoinet::labeling::attach_labels;
use hoinet::model_io::model_roundtrip;
use hoinet::pipeline::{
    activation_trace, classify_activity, congruence_compare, make_incongruent,
    train_architecture, ObjectLabelMode, TrainedModel,
};
use hoinet::synth::synth_generate;

#[test]
fn criterion_01_habituation_fixed_point() {
    let fixed = 1.0 - 1.0 / 1.05;
    let mut h: f64 = 1.0;
    let mut steps = 0;
    while (h - fixed).abs() >= 1e-6 {
        h = habituate(h, 0.3, 1.05);
        steps += 1;
        assert!(steps <= 500, "no convergence within 500 steps");
    }
    assert!((h - 0.047619).abs() < 1e-6);
    println!("acceptance 1 pass: habituation reached {fixed:.6} in {steps} steps");
}

fn gaussian_mixture(rng: &mut ChaCha8Rng, means: &[[f64; 2]], per_mean: usize, sigma: f64) -> Vec<MaskedVector> {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut data = Vec::with_capacity(means.len() * per_mean);
    for _ in 0..per_mean {
        for m in means {
            data.push(MaskedVector::dense(vec![
                m[0] + normal.sample(rng),
                m[1] + normal.sample(rng),
            ]));
        }
    }
    data
}

#[test]
fn criterion_02_gwr_convergence_on_gaussian_mixture() {
    let means = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
    for seed in [101u64, 202, 303] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = gaussian_mixture(&mut rng, &means, 500, 0.05);
        let params = GwrParams {
            insertion_threshold: 0.85,
            rng_seed: seed,
            ..GwrParams::default()
        };
        let net = GwrNetwork::train(params, &data).unwrap();
        let qe = net.quantization_error(&data).unwrap();
        assert!(qe <= 0.1, "seed {seed}: quantization error {qe}");
        for m in &means {
            let nearest = net
                .neurons()
                .map(|n| masked_distance(&n.weight, m, None))
                .fold(f64::INFINITY, f64::min);
            assert!(
                nearest <= 0.15,
                "seed {seed}: no neuron within 3 sigma of {m:?} ({nearest})"
            );
        }
    }
    println!("acceptance 2 pass: QE <= 0.1 and all component means covered for 3 seeds");
}

#[test]
fn criterion_03_topology_preservation() {
    let centers = [[0.15, 0.5], [0.85, 0.5]];
    let sigma = 0.03; // separation 0.7 >= 10 sigma
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let data = gaussian_mixture(&mut rng, &centers, 400, sigma);
    let net = GwrNetwork::train(
        GwrParams {
            rng_seed: 77,
            ..GwrParams::default()
        },
        &data,
    )
    .unwrap();
    let side = |w: &[f64]| -> usize {
        usize::from(
            masked_distance(w, &centers[1], None) < masked_distance(w, &centers[0], None),
        )
    };
    let total = net.edges().len();
    assert!(total > 0, "network kept no edges");
    let crossing = net
        .edges()
        .iter()
        .filter(|e| {
            let a = net.neuron(e.a).unwrap();
            let b = net.neuron(e.b).unwrap();
            side(&a.weight) != side(&b.weight)
        })
        .count();
    let fraction = crossing as f64 / total as f64;
    assert!(
        fraction <= 0.05,
        "{crossing}/{total} edges cross the cluster gap"
    );
    println!(
        "acceptance 3 pass: {crossing}/{total} cross-cluster edges ({:.2}% <= 5%)",
        fraction * 100.0
    );
}

fn loso_accuracy(mode: ObjectLabelMode) -> f64 {
    let ds = synth_generate(&common::ambiguous_pairs_spec(42, 6, 3)).unwrap();
    let mut config = common::acceptance_config();
    config.label_mode = mode;
    let plan = make_splits(&ds.subjects(), SplitStrategy::LeaveOneSubjectOut, 0).unwrap();
    let mut truths = Vec::new();
    let mut preds = Vec::new();
    for fold in &plan.folds {
        let train = ds.subset(&fold.train);
        let model = train_architecture(&train, &config).unwrap();
        for &i in &fold.test {
            let r = &ds.records[i];
            let decision = classify_activity(&model, r).expect("classification failed");
            truths.push(r.activity);
            preds.push(decision.activity);
        }
    }
    let (_, report) = evaluate(&truths, &preds, ds.manifest.activities.len()).unwrap();
    report.accuracy
}

#[test]
fn criterion_04_object_identity_disambiguation() {
    let full = loso_accuracy(ObjectLabelMode::Votes);
    assert!(full >= 0.95, "full pipeline LOSO accuracy {full}");
    let pose_only = loso_accuracy(ObjectLabelMode::Zeroed);
    assert!(pose_only <= 0.75, "pose-only LOSO accuracy {pose_only}");
    println!(
        "acceptance 4 pass: LOSO accuracy {full:.3} with objects, {pose_only:.3} pose-only"
    );
}

fn full_model() -> (TrainedModel, Vec<SequenceRecord>) {
    let ds = synth_generate(&common::ambiguous_pairs_spec(42, 6, 3)).unwrap();
    let model = train_architecture(&ds, &common::acceptance_config()).unwrap();
    (model, ds.records)
}

#[test]
fn criterion_05_congruence() {
    let (model, records) = full_model();
    // Swap each sequence's object for one never seen with its pose pattern:
    // the two raise-pattern activities take sweep-pattern objects and back.
    let cross: [usize; 4] = [2, 3, 0, 1];
    let congruent: Vec<SequenceRecord> = records.clone();
    let incongruent: Vec<SequenceRecord> = records
        .iter()
        .map(|r| {
            let wanted = cross[r.activity];
            let donor = records
                .iter()
                .find(|d| d.category_set() == vec![wanted])
                .unwrap();
            make_incongruent(r, &donor.objects).unwrap()
        })
        .collect();
    let report = congruence_compare(&model, &congruent, &incongruent).unwrap();
    assert!(
        report.fraction_congruent_higher >= 0.8,
        "only {:.2} of pairs activate higher on the congruent member",
        report.fraction_congruent_higher
    );
    println!(
        "acceptance 5 pass: congruent activation higher in {:.1}% of pairs",
        report.fraction_congruent_higher * 100.0
    );
}

/// Independent VLAD oracle: per-cell exhaustive scan and direct summation.
fn vlad_oracle(centroids: &[Vec<f64>], descriptors: &[Vec<f64>]) -> Vec<f64> {
    let k = centroids.len();
    let d = centroids[0].len();
    let assignment: Vec<usize> = descriptors
        .iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let dist: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist < best_d {
                    best = j;
                    best_d = dist;
                }
            }
            best
        })
        .collect();
    let mut raw = vec![0.0; k * d];
    for (j, c) in centroids.iter().enumerate() {
        for i in 0..d {
            let mut sum = 0.0;
            for (x, &a) in descriptors.iter().zip(&assignment) {
                if a == j {
                    sum += x[i] - c[i];
                }
            }
            raw[j * d + i] = sum;
        }
    }
    for v in raw.iter_mut() {
        *v = v.signum() * v.abs().sqrt();
    }
    let norm: f64 = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in raw.iter_mut() {
            *v /= norm;
        }
    }
    raw
}

#[test]
fn criterion_06_vlad_matches_bruteforce_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.random_range(1..=3);
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=10);
        let centroids: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let descriptors: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let codebook = Codebook::new(centroids.clone(), 0).unwrap();
        let code = vlad_encode(&codebook, &descriptors).unwrap();
        let oracle = vlad_oracle(&centroids, &descriptors);
        for (a, b) in code.values.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-9, "max deviation from oracle {worst}");
    println!("acceptance 6 pass: 200 VLAD instances match the oracle (max dev {worst:.2e})");
}

#[test]
fn criterion_07_skeletal_quad_invariance() {
    let joints = [
        [0.0, 0.25, 0.0],   // torso
        [0.0, 0.55, 0.0],   // neck
        [0.05, 0.62, 0.14], // hand
        [0.2, 0.4, 0.12],   // elbow
    ];
    let base = skeletal_quad(joints[0], joints[1], joints[2], joints[3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        // Random rotation (axis-angle), uniform scale, translation.
        let axis = loop {
            let a: [f64; 3] = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
            if n > 0.1 {
                break [a[0] / n, a[1] / n, a[2] / n];
            }
        };
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let scale = 10f64.powf(rng.random_range(-1.0..1.0));
        let t = [
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        ];
        let (s, c) = angle.sin_cos();
        let moved: Vec<[f64; 3]> = joints
            .iter()
            .map(|p| {
                let kxp = [
                    axis[1] * p[2] - axis[2] * p[1],
                    axis[2] * p[0] - axis[0] * p[2],
                    axis[0] * p[1] - axis[1] * p[0],
                ];
                let kdp = axis[0] * p[0] + axis[1] * p[1] + axis[2] * p[2];
                let mut out = [0.0; 3];
                for i in 0..3 {
                    out[i] = (p[i] * c + kxp[i] * s + axis[i] * kdp * (1.0 - c)) * scale + t[i];
                }
                out
            })
            .collect();
        let q = skeletal_quad(moved[0], moved[1], moved[2], moved[3]).unwrap();
        for (a, b) in q.values.iter().zip(base.values) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-8, "max deviation {worst}");
    println!("acceptance 7 pass: 1000 similarity transforms, max deviation {worst:.2e}");
}

#[test]
fn criterion_08_labeling_invariances() {
    // Worked normalization example: counts {A:2, B:1} on one neuron with
    // f_A = 4, f_B = 1, f_a = 3 give H(A) = 1/6, H(B) = 1/3, argmax B.
    let net = GwrNetwork::from_prototypes(
        GwrParams::default(),
        vec![vec![0.0], vec![100.0]],
    )
    .unwrap();
    let labeled = vec![
        (vec![0.1], 0),
        (vec![-0.1], 0),
        (vec![0.05], 1),
        (vec![99.0], 0),
        (vec![101.0], 0),
    ];
    let (hists, _) = attach_labels(&net, &labeled, 2).unwrap();
    let h = hists.get(NeuronId(0)).unwrap();
    assert_eq!(h[0], 1.0 / 6.0);
    assert_eq!(h[1], 1.0 / 3.0);
    assert!(h[1] > h[0]);

    // Scaling all histograms never changes a classification.
    let ds = synth_generate(&common::ambiguous_pairs_spec(99, 5, 5)).unwrap();
    assert_eq!(ds.records.len(), 100);
    let train = synth_generate(&common::ambiguous_pairs_spec(55, 2, 2)).unwrap();
    let model = train_architecture(&train, &common::fast_config()).unwrap();
    let mut scaled = model.clone();
    scaled.activity_histograms.scale(12.345);
    scaled.object_histograms.scale(12.345);
    for r in &ds.records {
        let a = classify_activity(&model, r).expect("classify");
        let b = classify_activity(&scaled, r).expect("classify scaled");
        assert_eq!(a.activity, b.activity, "scaling changed {}", r.id);
    }
    println!("acceptance 8 pass: worked example exact, scaling left 100 classifications unchanged");
}

#[test]
fn criterion_09_determinism_and_persistence() {
    let train = synth_generate(&common::ambiguous_pairs_spec(13, 2, 2)).unwrap();
    let config = common::fast_config();
    let a = train_architecture(&train, &config).unwrap();
    let b = train_architecture(&train, &config).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap(),
        "identical config and seeds must give a bit-identical model"
    );

    let test_set = synth_generate(&common::ambiguous_pairs_spec(14, 5, 3)).unwrap();
    assert!(test_set.records.len() >= 50);
    let dir = tempfile::tempdir().unwrap();
    let reloaded = model_roundtrip(&dir.path().join("model.json"), &a).unwrap();
    for r in test_set.records.iter().take(50) {
        let before = classify_activity(&a, r).expect("classify");
        let after = classify_activity(&reloaded, r).expect("classify reloaded");
        assert_eq!(before, after, "decision changed after roundtrip for {}", r.id);
        assert_eq!(
            activation_trace(&a, r).unwrap(),
            activation_trace(&reloaded, r).unwrap()
        );
    }
    println!("acceptance 9 pass: bit-identical retrain and exact roundtrip on 50 sequences");
}

#[test]
fn criterion_10_metrics_oracle_and_split_invariants() {
    let (matrix, report) = evaluate(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
    assert!((report.accuracy - 2.0 / 3.0).abs() < 1e-12);
    assert!((report.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-12);
    assert!((report.per_class[1].f1 - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(matrix.total(), 3);

    // LOSO over a 6-subject synthetic manifest.
    let ds = synth_generate(&common::ambiguous_pairs_spec(7, 6, 1)).unwrap();
    let subjects = ds.subjects();
    let plan = make_splits(&subjects, SplitStrategy::LeaveOneSubjectOut, 0).unwrap();
    assert_eq!(plan.folds.len(), 6);
    plan.validate(subjects.len()).unwrap();
    for fold in &plan.folds {
        let held: Vec<&String> = fold.test.iter().map(|&i| &subjects[i]).collect();
        assert!(held.windows(2).all(|w| w[0] == w[1]));
    }

    // 4-fold over 8 items.
    let ds8 = synth_generate(&common::ambiguous_pairs_spec(8, 2, 1)).unwrap();
    assert_eq!(ds8.records.len(), 8);
    let plan8 = make_splits(&ds8.subjects(), SplitStrategy::KFold(4), 3).unwrap();
    assert_eq!(plan8.folds.len(), 4);
    assert!(plan8.folds.iter().all(|f| f.test.len() == 2));
    plan8.validate(8).unwrap();

    println!("acceptance 10 pass: metrics oracle exact, split plans partition cleanly");
}
