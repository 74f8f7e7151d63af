//! Synthetic gait dataset generator: identity-specific sums of sinusoids
//! over joint channels plus per-sample Gaussian noise. Exists to give the
//! harness a self-contained ground truth at desk scale; the identity
//! structure is controllable, not anatomically realistic.

use gaitlab_core::{Error, GaitSample, LabeledDataset, Modality};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::manifest::DatasetManifest;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub samples_per_class: usize,
    pub joints: usize,
    pub frames: usize,
    pub harmonics: usize,
    pub amplitude: f64,
    pub noise_sigma: f64,
    /// Consecutive cycles share a sequence id in groups of this size.
    pub cycles_per_sequence: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(classes: usize, samples_per_class: usize, seed: u64) -> Self {
        SynthConfig {
            classes,
            samples_per_class,
            joints: 15,
            frames: 100,
            harmonics: 3,
            amplitude: 1.0,
            noise_sigma: 0.1,
            cycles_per_sequence: 2,
            seed,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.classes < 2 {
            return Err(Error::InvalidArgument(
                "synthetic datasets need at least 2 identity classes".into(),
            ));
        }
        if self.samples_per_class < 2 {
            return Err(Error::InvalidArgument(
                "synthetic datasets need at least 2 samples per class".into(),
            ));
        }
        if self.joints < 1 || self.frames < 2 || self.harmonics < 1 {
            return Err(Error::InvalidArgument(
                "synthetic shape parameters must be positive (frames at least 2)".into(),
            ));
        }
        if self.noise_sigma < 0.0 || self.amplitude <= 0.0 {
            return Err(Error::InvalidArgument(
                "amplitude must be positive and noise non-negative".into(),
            ));
        }
        if self.cycles_per_sequence < 1 {
            return Err(Error::InvalidArgument(
                "cycles per sequence must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn base_rng(cfg: &SynthConfig) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    rng
}

fn noise_rng(cfg: &SynthConfig) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    rng
}

/// Identity base trajectories, one frames-by-3J matrix per class. Joint 0
/// is the root and stays pinned at the origin. Deterministic in the seed
/// and independent of the noise level.
pub fn base_trajectories(cfg: &SynthConfig) -> Result<Vec<DMatrix<f64>>, Error> {
    cfg.validate()?;
    let mut rng = base_rng(cfg);
    let channels = 3 * cfg.joints;
    let mut bases = Vec::with_capacity(cfg.classes);
    for _ in 0..cfg.classes {
        let mut base = DMatrix::zeros(cfg.frames, channels);
        for ch in 3..channels {
            // Sinusoid mixture with 1/h amplitude decay.
            let mut amps = Vec::with_capacity(cfg.harmonics);
            let mut phases = Vec::with_capacity(cfg.harmonics);
            for h in 1..=cfg.harmonics {
                amps.push(rng.gen_range(-cfg.amplitude..cfg.amplitude) / h as f64);
                phases.push(rng.gen_range(0.0..std::f64::consts::TAU));
            }
            for t in 0..cfg.frames {
                let u = t as f64 / cfg.frames as f64;
                let mut v = 0.0;
                for h in 1..=cfg.harmonics {
                    v += amps[h - 1]
                        * (std::f64::consts::TAU * h as f64 * u + phases[h - 1]).sin();
                }
                base[(t, ch)] = v;
            }
        }
        bases.push(base);
    }
    Ok(bases)
}

/// Root-mean-square spread of the base signals across identities,
/// averaged over frames and non-root channels. The reference scale for
/// choosing a noise level.
pub fn class_signal_spread(cfg: &SynthConfig) -> Result<f64, Error> {
    let bases = base_trajectories(cfg)?;
    let channels = 3 * cfg.joints;
    let mut acc = 0.0;
    let mut count = 0usize;
    for t in 0..cfg.frames {
        for ch in 3..channels {
            let mean: f64 = bases.iter().map(|b| b[(t, ch)]).sum::<f64>() / cfg.classes as f64;
            let var: f64 = bases
                .iter()
                .map(|b| (b[(t, ch)] - mean) * (b[(t, ch)] - mean))
                .sum::<f64>()
                / cfg.classes as f64;
            acc += var;
            count += 1;
        }
    }
    Ok((acc / count as f64).sqrt())
}

/// Generates the labeled dataset: per class, `samples_per_class` noisy
/// copies of the class base trajectory.
pub fn generate(cfg: &SynthConfig) -> Result<(LabeledDataset, DatasetManifest), Error> {
    let bases = base_trajectories(cfg)?;
    let mut noise = noise_rng(cfg);
    let channels = 3 * cfg.joints;
    let mut samples = Vec::with_capacity(cfg.classes * cfg.samples_per_class);
    let joint_names: Vec<String> = (0..cfg.joints)
        .map(|j| if j == 0 { "root".to_string() } else { format!("j{j:02}") })
        .collect();
    for (c, base) in bases.iter().enumerate() {
        for k in 0..cfg.samples_per_class {
            let mut chans = base.clone();
            if cfg.noise_sigma > 0.0 {
                for t in 0..cfg.frames {
                    for ch in 3..channels {
                        let z: f64 = StandardNormal.sample(&mut noise);
                        chans[(t, ch)] += cfg.noise_sigma * z;
                    }
                }
            }
            samples.push(GaitSample::new(
                chans,
                Modality::JointCoordinates,
                format!("id{c:02}"),
                format!("id{c:02}_s{:02}", k / cfg.cycles_per_sequence),
                (k % cfg.cycles_per_sequence) as u32,
                cfg.frames as u32,
                120.0,
            )?);
        }
    }
    let dataset = LabeledDataset::new(samples, Some(joint_names))?;
    let mut manifest = DatasetManifest::describe(&dataset);
    manifest.provenance = vec![
        format!(
            "synthetic: {} classes x {} samples, {} joints, {} frames",
            cfg.classes, cfg.samples_per_class, cfg.joints, cfg.frames
        ),
        format!(
            "harmonics {} amplitude {} noise sigma {} seed {}",
            cfg.harmonics, cfg.amplitude, cfg.noise_sigma, cfg.seed
        ),
    ];
    Ok((dataset, manifest))
}
