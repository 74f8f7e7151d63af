//! End-to-end experiment flows over the public API: learned transforms
//! and geometric extractors on a synthetic walker population.

use gaitlab_core::{
    distance_matrix, run_experiment, template::MahalanobisMetric, transform::project,
    CvMode, ExtractorRegistry, GaitSample, LabeledDataset, Method, Modality, NullClock,
    SetupConfig, SetupKind, TemplateDistance,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const JOINTS: &[&str] = &[
    "root", "head", "lowerneck", "lhipjoint", "rhipjoint", "lfemur", "rfemur", "ltibia",
    "rtibia", "lfoot", "rfoot", "lclavicle", "rclavicle", "lhumerus", "rhumerus", "lradius",
    "rradius",
];

fn rest_position(name: &str) -> [f64; 3] {
    match name {
        "root" => [0.0, 1.0, 0.0],
        "head" => [0.0, 1.8, 0.0],
        "lowerneck" => [0.0, 1.5, 0.0],
        "lhipjoint" => [-0.1, 0.9, 0.0],
        "rhipjoint" => [0.1, 0.9, 0.0],
        "lfemur" => [-0.1, 0.5, 0.0],
        "rfemur" => [0.1, 0.5, 0.0],
        "ltibia" => [-0.1, 0.1, 0.0],
        "rtibia" => [0.1, 0.1, 0.0],
        "lfoot" => [-0.1, 0.0, 0.1],
        "rfoot" => [0.1, 0.0, 0.1],
        "lclavicle" => [-0.2, 1.4, 0.0],
        "rclavicle" => [0.2, 1.4, 0.0],
        "lhumerus" => [-0.25, 1.1, 0.0],
        "rhumerus" => [0.25, 1.1, 0.0],
        "lradius" => [-0.25, 0.85, 0.0],
        "rradius" => [0.25, 0.85, 0.0],
        _ => [0.0, 0.0, 0.0],
    }
}

/// Walker population with identity-specific limb swing amplitude, phase
/// and body scale so both learned and geometric features separate it.
fn walker_dataset(classes: usize, per_class: usize, frames: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for c in 0..classes {
        let swing = 0.15 + 0.3 * (c as f64 / classes as f64) + rng.gen_range(0.0..0.02);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let scale = 0.9 + 0.25 * (c as f64 / classes as f64);
        for k in 0..per_class {
            let mut channels = DMatrix::zeros(frames, 3 * JOINTS.len());
            for t in 0..frames {
                let u = std::f64::consts::TAU * t as f64 / frames as f64;
                for (j, name) in JOINTS.iter().enumerate() {
                    let mut p = rest_position(name);
                    p[0] *= scale;
                    p[1] *= scale;
                    p[2] *= scale;
                    // Lower limbs swing forward and back in antiphase.
                    let limb = match *name {
                        "lfemur" | "ltibia" | "lfoot" => 1.0,
                        "rfemur" | "rtibia" | "rfoot" => -1.0,
                        "lradius" | "lhumerus" => -0.5,
                        "rradius" | "rhumerus" => 0.5,
                        _ => 0.0,
                    };
                    p[2] += limb * swing * (u + phase).sin();
                    let noise = if *name == "root" {
                        [0.0; 3]
                    } else {
                        [
                            rng.gen_range(-0.005..0.005),
                            rng.gen_range(-0.005..0.005),
                            rng.gen_range(-0.005..0.005),
                        ]
                    };
                    channels[(t, 3 * j)] = p[0] + noise[0] - rest_position("root")[0] * scale;
                    channels[(t, 3 * j + 1)] = p[1] + noise[1] - rest_position("root")[1] * scale;
                    channels[(t, 3 * j + 2)] = p[2] + noise[2] - rest_position("root")[2] * scale;
                }
            }
            samples.push(
                GaitSample::new(
                    channels,
                    Modality::JointCoordinates,
                    format!("id{c:02}"),
                    format!("id{c:02}_s{:02}", k / 2),
                    (k % 2) as u32,
                    frames as u32,
                    120.0,
                )
                .unwrap(),
            );
        }
    }
    LabeledDataset::new(samples, Some(JOINTS.iter().map(|s| s.to_string()).collect())).unwrap()
}

#[test]
fn learned_methods_beat_chance_by_a_wide_margin() {
    let ds = walker_dataset(6, 12, 20, 41);
    let registry = ExtractorRegistry::with_cmu_defaults();
    let setup = SetupConfig {
        repetitions: 2,
        ..SetupConfig::homogeneous(6, 1234)
    };
    for method in [
        Method::Mmc { rank_tolerance: None },
        Method::PcaLda { pca_dims: None },
    ] {
        let report = run_experiment(&ds, &method, &setup, &registry, &NullClock).unwrap();
        assert!(
            report.average.ccr > 0.8,
            "{} ccr {}",
            report.method,
            report.average.ccr
        );
        assert!(report.average.auc.unwrap() > 0.8);
        for rep in &report.repetitions {
            assert!(rep.template_dim <= 5);
        }
    }
}

#[test]
fn geometric_extractors_run_under_every_setup() {
    let ds = walker_dataset(6, 10, 16, 42);
    let registry = ExtractorRegistry::with_cmu_defaults();
    for name in ["raw", "alis", "balla", "preisj"] {
        for kind in [SetupKind::Homogeneous, SetupKind::Heterogeneous] {
            let setup = SetupConfig {
                kind,
                learn_classes: if kind == SetupKind::Homogeneous { 4 } else { 2 },
                eval_classes: 4,
                repetitions: 1,
                folds: 5,
                ..SetupConfig::homogeneous(4, 77)
            };
            let report = run_experiment(
                &ds,
                &Method::Extractor(name.to_string()),
                &setup,
                &registry,
                &NullClock,
            )
            .unwrap();
            let expected_dim = match name {
                "alis" => 2,
                "balla" => 18,
                "preisj" => 13,
                _ => ds.dimension(),
            };
            assert_eq!(report.repetitions[0].template_dim, expected_dim, "{name}");
            assert!(report.average.ccr >= 0.0 && report.average.ccr <= 1.0);
            // Curves are present and well-formed for distance methods.
            let rep = &report.repetitions[0];
            let cmc = &rep.cmc;
            assert_eq!(*cmc.last().unwrap(), 1.0);
            assert!(cmc.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}

#[test]
fn grouped_cv_respects_sequences_through_the_experiment() {
    let ds = walker_dataset(4, 12, 16, 43);
    let registry = ExtractorRegistry::with_cmu_defaults();
    let setup = SetupConfig {
        cv_mode: CvMode::SequenceGrouped,
        folds: 4,
        repetitions: 2,
        ..SetupConfig::homogeneous(4, 9)
    };
    let report = run_experiment(
        &ds,
        &Method::Mmc { rank_tolerance: None },
        &setup,
        &registry,
        &NullClock,
    )
    .unwrap();
    assert!(report.average.ccr > 0.5);
}

/// Whitening consequence: for MMC templates, Mahalanobis and Euclidean
/// produce the same distance matrix to within 1e-6.
#[test]
fn mahalanobis_equals_euclidean_for_mmc_templates() {
    let ds = walker_dataset(5, 10, 16, 44);
    let transform = gaitlab_core::learn_mmc(&ds, None).unwrap();
    let templates: Vec<_> = ds
        .samples()
        .iter()
        .map(|s| project(&transform, s).unwrap())
        .collect();
    let mahalanobis = TemplateDistance::Mahalanobis(
        MahalanobisMetric::new(transform.inverse_total().clone()).unwrap(),
    );
    let m1 = distance_matrix(&templates, &mahalanobis, &NullClock).unwrap();
    let m2 = distance_matrix(&templates, &TemplateDistance::Euclidean, &NullClock).unwrap();
    let mut worst = 0.0f64;
    for i in 0..m1.len() {
        for j in 0..m1.len() {
            worst = worst.max((m1.value(i, j) - m2.value(i, j)).abs());
        }
    }
    assert!(worst <= 1e-6, "max deviation {worst}");
}
