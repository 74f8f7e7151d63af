use alloc::string::String;
use alloc::vec::Vec;

use crate::eval::separability::Separability;
use crate::eval::SetupConfig;

/// Curves of one repetition's threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurves {
    pub thresholds: Vec<f64>,
    pub far: Vec<f64>,
    pub frr: Vec<f64>,
}

/// Everything measured in one repetition of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionReport {
    pub learn_classes: usize,
    pub eval_classes: usize,
    pub learn_samples: usize,
    pub eval_samples: usize,
    /// Absent for the random baseline, which has no distance function.
    pub separability: Option<Separability>,
    pub ccr: f64,
    /// Rank-k rates for k = 1..=eval_classes.
    pub cmc: Vec<f64>,
    pub eer: Option<f64>,
    pub auc: Option<f64>,
    pub map: Option<f64>,
    pub far_frr: Option<ThresholdCurves>,
    /// (FAR, TAR) points including the (0,0) origin.
    pub roc: Option<Vec<(f64, f64)>>,
    /// (recall, precision) points including (0,1).
    pub recall_precision: Option<Vec<(f64, f64)>>,
    /// Average distance computation time in milliseconds.
    pub dct_ms: Option<f64>,
    pub template_dim: usize,
}

/// Scalar metrics averaged over repetitions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSummary {
    pub dbi: Option<f64>,
    pub di: Option<f64>,
    pub sc: Option<f64>,
    pub fdr: Option<f64>,
    pub ccr: f64,
    pub eer: Option<f64>,
    pub auc: Option<f64>,
    pub map: Option<f64>,
    pub dct_ms: Option<f64>,
    pub template_dim: f64,
    /// Rank-k rates averaged elementwise over repetitions.
    pub cmc: Vec<f64>,
}

/// Full result of one experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub method: String,
    pub setup: SetupConfig,
    pub repetitions: Vec<RepetitionReport>,
    pub average: MetricSummary,
}

fn mean_scalar(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_optional(values: Vec<Option<f64>>) -> Option<f64> {
    if values.iter().any(Option::is_none) {
        return None;
    }
    let unwrapped: Vec<f64> = values.into_iter().flatten().collect();
    Some(mean_scalar(&unwrapped))
}

pub(crate) fn summarize(repetitions: &[RepetitionReport]) -> MetricSummary {
    let cmc_len = repetitions.iter().map(|r| r.cmc.len()).max().unwrap_or(0);
    let mut cmc = alloc::vec![0.0f64; cmc_len];
    for rep in repetitions {
        for (k, slot) in cmc.iter_mut().enumerate() {
            // A repetition's curve is constant 1 past its own class count.
            *slot += rep.cmc.get(k).copied().unwrap_or(1.0);
        }
    }
    for slot in cmc.iter_mut() {
        *slot /= repetitions.len() as f64;
    }

    MetricSummary {
        dbi: mean_optional(
            repetitions
                .iter()
                .map(|r| r.separability.map(|s| s.dbi))
                .collect(),
        ),
        di: mean_optional(
            repetitions
                .iter()
                .map(|r| r.separability.map(|s| s.di))
                .collect(),
        ),
        sc: mean_optional(
            repetitions
                .iter()
                .map(|r| r.separability.map(|s| s.sc))
                .collect(),
        ),
        fdr: mean_optional(
            repetitions
                .iter()
                .map(|r| r.separability.map(|s| s.fdr))
                .collect(),
        ),
        ccr: mean_scalar(&repetitions.iter().map(|r| r.ccr).collect::<Vec<_>>()),
        eer: mean_optional(repetitions.iter().map(|r| r.eer).collect()),
        auc: mean_optional(repetitions.iter().map(|r| r.auc).collect()),
        map: mean_optional(repetitions.iter().map(|r| r.map).collect()),
        dct_ms: mean_optional(repetitions.iter().map(|r| r.dct_ms).collect()),
        template_dim: mean_scalar(
            &repetitions
                .iter()
                .map(|r| r.template_dim as f64)
                .collect::<Vec<_>>(),
        ),
        cmc,
    }
}
