//! Experiment setups, cross-validated classification, separability
//! coefficients, threshold metrics and the experiment driver.

pub mod classify;
pub mod distance_matrix;
pub mod metrics;
pub mod report;
pub mod separability;
pub mod split;

pub use classify::{
    assign_folds, classify_wta, cmc, cross_validate, random_classification, CvMode, CvOutcome,
    FoldAssignment,
};
pub use distance_matrix::{distance_matrix, DistanceMatrix, TimingStats};
pub use metrics::{far_frr_eer, rcl_pcn_map, roc_auc};
pub use report::{EvaluationReport, MetricSummary, RepetitionReport, ThresholdCurves};
pub use separability::{separability, Separability};
pub use split::{split_heterogeneous, split_homogeneous};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::extractors::{ExtractorRegistry, RandomClassifier};
use crate::sample::LabeledDataset;
use crate::template::{GaitTemplate, MahalanobisMetric, TemplateDistance};
use crate::transform::{learn_mmc, learn_pcalda, project};

/// Whether learning and evaluation share identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetupKind {
    Homogeneous,
    Heterogeneous,
}

impl SetupKind {
    pub fn code(&self) -> &'static str {
        match self {
            SetupKind::Homogeneous => "homogeneous",
            SetupKind::Heterogeneous => "heterogeneous",
        }
    }

    pub fn parse(code: &str) -> Option<SetupKind> {
        match code.to_ascii_lowercase().as_str() {
            "homogeneous" | "homo" => Some(SetupKind::Homogeneous),
            "heterogeneous" | "hetero" => Some(SetupKind::Heterogeneous),
            _ => None,
        }
    }
}

/// One experiment configuration: the split, its sizes, the repetition
/// count and the cross-validation flavor. All sampling is driven by the
/// recorded seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SetupConfig {
    pub kind: SetupKind,
    pub learn_classes: usize,
    pub eval_classes: usize,
    /// Fraction of each class used for learning in the homogeneous setup.
    pub learn_ratio: f64,
    pub repetitions: usize,
    pub folds: usize,
    pub cv_mode: CvMode,
    pub seed: u64,
}

impl SetupConfig {
    pub fn homogeneous(classes: usize, seed: u64) -> Self {
        SetupConfig {
            kind: SetupKind::Homogeneous,
            learn_classes: classes,
            eval_classes: classes,
            learn_ratio: 1.0 / 3.0,
            repetitions: 3,
            folds: 10,
            cv_mode: CvMode::Nested,
            seed,
        }
    }

    pub fn heterogeneous(learn_classes: usize, eval_classes: usize, seed: u64) -> Self {
        SetupConfig {
            kind: SetupKind::Heterogeneous,
            learn_classes,
            eval_classes,
            learn_ratio: 1.0 / 3.0,
            repetitions: 3,
            folds: 10,
            cv_mode: CvMode::Nested,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == SetupKind::Homogeneous && self.learn_classes != self.eval_classes {
            return Err(Error::InvalidArgument(
                "homogeneous setups require equal learning and evaluation class counts".into(),
            ));
        }
        if self.eval_classes < 2 {
            return Err(Error::InvalidArgument(
                "evaluation needs at least 2 identity classes".into(),
            ));
        }
        if !(self.learn_ratio > 0.0 && self.learn_ratio < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning ratio must lie in (0, 1), got {}",
                self.learn_ratio
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidArgument("cross-validation needs k >= 2".into()));
        }
        Ok(())
    }
}

/// The method under evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Mmc { rank_tolerance: Option<f64> },
    PcaLda { pca_dims: Option<usize> },
    Extractor(String),
    Random,
}

impl Method {
    pub fn id(&self) -> String {
        match self {
            Method::Mmc { .. } => "mmc".to_string(),
            Method::PcaLda { .. } => "pcalda".to_string(),
            Method::Extractor(name) => name.clone(),
            Method::Random => "random".to_string(),
        }
    }

    pub fn parse(name: &str) -> Method {
        match name.to_ascii_lowercase().as_str() {
            "mmc" => Method::Mmc {
                rank_tolerance: None,
            },
            "pcalda" | "pca+lda" => Method::PcaLda { pca_dims: None },
            "random" => Method::Random,
            other => Method::Extractor(other.to_string()),
        }
    }
}

/// The built-in experiment presets, parameterized by the dataset's class
/// count. Class counts are capped at 27 per setup side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    A,
    B,
    C,
    D,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Preset> {
        match name.to_ascii_uppercase().as_str() {
            "A" => Some(Preset::A),
            "B" => Some(Preset::B),
            "C" => Some(Preset::C),
            "D" => Some(Preset::D),
            _ => None,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Preset::A => "A",
            Preset::B => "B",
            Preset::C => "C",
            Preset::D => "D",
        }
    }

    /// Expands the preset into concrete setups for a dataset with
    /// `total_classes` identities, copying repetition, fold, ratio, seed
    /// and CV settings from `base`.
    pub fn setups(&self, total_classes: usize, base: &SetupConfig) -> Vec<SetupConfig> {
        const CAP: usize = 27;
        let mut out = Vec::new();
        let with = |kind: SetupKind, cl: usize, ce: usize| SetupConfig {
            kind,
            learn_classes: cl,
            eval_classes: ce,
            ..base.clone()
        };
        match self {
            Preset::A => {
                for c in 2..=CAP.min(total_classes) {
                    out.push(with(SetupKind::Homogeneous, c, c));
                }
            }
            Preset::B => {
                for c in 2..=CAP.min(total_classes / 2) {
                    out.push(with(SetupKind::Heterogeneous, c, c));
                }
            }
            Preset::C => {
                let ce = CAP.min(total_classes.saturating_sub(2));
                for cl in 2..=CAP.min(total_classes.saturating_sub(ce)) {
                    out.push(with(SetupKind::Heterogeneous, cl, ce));
                }
            }
            Preset::D => {
                for cl in 2..=CAP.min(total_classes / 2) {
                    let ce = total_classes - cl;
                    if ce >= 2 {
                        out.push(with(SetupKind::Heterogeneous, cl, ce));
                    }
                }
            }
        }
        out
    }
}

/// Runs one experiment: per repetition, split the dataset, learn or
/// instantiate the method, project the evaluation samples, and measure
/// separability, cross-validated classification, threshold metrics and
/// scalability. The report carries the per-repetition values and their
/// average.
pub fn run_experiment(
    dataset: &LabeledDataset,
    method: &Method,
    setup: &SetupConfig,
    registry: &ExtractorRegistry,
    clock: &dyn Clock,
) -> Result<EvaluationReport> {
    setup.validate()?;
    let mut repetitions = Vec::with_capacity(setup.repetitions);
    for rep in 0..setup.repetitions {
        let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
        rng.set_stream(rep as u64);
        let report = run_repetition(dataset, method, setup, registry, clock, &mut rng)
            .map_err(|e| Error::Repetition {
                index: rep,
                source: alloc::boxed::Box::new(e),
            })?;
        repetitions.push(report);
    }
    let average = report::summarize(&repetitions);
    Ok(EvaluationReport {
        method: method.id(),
        setup: setup.clone(),
        repetitions,
        average,
    })
}

fn run_repetition(
    dataset: &LabeledDataset,
    method: &Method,
    setup: &SetupConfig,
    registry: &ExtractorRegistry,
    clock: &dyn Clock,
    rng: &mut ChaCha8Rng,
) -> Result<RepetitionReport> {
    let (learning, evaluation) = match setup.kind {
        SetupKind::Homogeneous => {
            split_homogeneous(dataset, setup.learn_classes, setup.learn_ratio, rng)?
        }
        SetupKind::Heterogeneous => {
            split_heterogeneous(dataset, setup.learn_classes, setup.eval_classes, rng)?
        }
    };

    if let Method::Random = method {
        let labels: Vec<String> = evaluation
            .samples()
            .iter()
            .map(|s| s.subject().to_string())
            .collect();
        let mut classifier = RandomClassifier::new(rng.clone());
        let (ccr, cmc) = random_classification(&labels, &mut classifier)?;
        return Ok(RepetitionReport {
            learn_classes: learning.class_count(),
            eval_classes: evaluation.class_count(),
            learn_samples: learning.len(),
            eval_samples: evaluation.len(),
            separability: None,
            ccr,
            cmc,
            eer: None,
            auc: None,
            map: None,
            far_frr: None,
            roc: None,
            recall_precision: None,
            dct_ms: None,
            template_dim: 0,
        });
    }

    let (templates, metric): (Vec<GaitTemplate>, TemplateDistance) = match method {
        Method::Mmc { rank_tolerance } => {
            let transform = learn_mmc(&learning, *rank_tolerance)?;
            let metric =
                TemplateDistance::Mahalanobis(MahalanobisMetric::new(transform.inverse_total().clone())?);
            let templates = evaluation
                .samples()
                .iter()
                .map(|s| project(&transform, s))
                .collect::<Result<_>>()?;
            (templates, metric)
        }
        Method::PcaLda { pca_dims } => {
            let transform = learn_pcalda(&learning, *pca_dims)?;
            let metric =
                TemplateDistance::Mahalanobis(MahalanobisMetric::new(transform.inverse_total().clone())?);
            let templates = evaluation
                .samples()
                .iter()
                .map(|s| project(&transform, s))
                .collect::<Result<_>>()?;
            (templates, metric)
        }
        Method::Extractor(name) => {
            let extractor = registry.instantiate(name, &evaluation)?;
            let templates = evaluation
                .samples()
                .iter()
                .map(|s| extractor.extract_template(s))
                .collect::<Result<_>>()?;
            (templates, extractor.distance())
        }
        Method::Random => unreachable!("handled above"),
    };

    let matrix = distance_matrix(&templates, &metric, clock)?;
    let sep = separability(&templates, &metric, &matrix)?;
    let cv = cross_validate(&matrix, setup.cv_mode, setup.folds, rng)?;
    let (thresholds, far, frr, eer) = far_frr_eer(&matrix)?;
    let (roc, auc) = roc_auc(&matrix)?;
    let (rcl_pcn, map) = rcl_pcn_map(&matrix)?;

    Ok(RepetitionReport {
        learn_classes: learning.class_count(),
        eval_classes: evaluation.class_count(),
        learn_samples: learning.len(),
        eval_samples: evaluation.len(),
        separability: Some(sep),
        ccr: cv.ccr,
        cmc: cv.cmc,
        eer: Some(eer),
        auc: Some(auc),
        map: Some(map),
        far_frr: Some(ThresholdCurves {
            thresholds,
            far,
            frr,
        }),
        roc: Some(roc),
        recall_precision: Some(rcl_pcn),
        dct_ms: Some(matrix.dct_ms()),
        template_dim: templates.first().map(|t| t.data.dim()).unwrap_or(0),
    })
}
