use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::template::{GaitTemplate, TemplateDistance};

/// Wall-clock accounting of the pairwise distance computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TimingStats {
    pub count: u64,
    pub total_ns: u64,
}

impl TimingStats {
    /// Average distance computation time in milliseconds.
    pub fn mean_ms(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.total_ns as f64 / self.count as f64 / 1e6
        }
    }
}

/// Symmetric matrix of distances between all evaluation templates, with
/// the per-row labels and sequence ids needed by the downstream metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
    labels: Vec<String>,
    sequences: Vec<Option<String>>,
    timing: TimingStats,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn sequences(&self) -> &[Option<String>] {
        &self.sequences
    }

    pub fn timing(&self) -> TimingStats {
        self.timing
    }

    /// Mean time per distance computation in milliseconds.
    pub fn dct_ms(&self) -> f64 {
        self.timing.mean_ms()
    }
}

/// Computes all pairwise template distances, timing each computation.
///
/// The result is exactly symmetric with a zero diagonal; each upper
/// triangle entry is computed once and mirrored.
pub fn distance_matrix(
    templates: &[GaitTemplate],
    metric: &TemplateDistance,
    clock: &dyn Clock,
) -> Result<DistanceMatrix> {
    if templates.len() < 2 {
        return Err(Error::InvalidArgument(
            "distance matrix needs at least 2 templates".into(),
        ));
    }
    let labels: Vec<String> = templates
        .iter()
        .map(|t| {
            t.label
                .clone()
                .ok_or_else(|| Error::InvalidArgument("template has no label".into()))
        })
        .collect::<Result<_>>()?;
    let sequences: Vec<Option<String>> = templates.iter().map(|t| t.sequence.clone()).collect();

    let n = templates.len();
    let mut values = DMatrix::zeros(n, n);
    let mut timing = TimingStats::default();
    for i in 0..n {
        for j in (i + 1)..n {
            let start = clock.now_ns();
            let d = metric
                .distance(&templates[i].data, &templates[j].data)
                .map_err(|e| Error::DistanceFailed {
                    row: i,
                    col: j,
                    source: Box::new(e),
                })?;
            let stop = clock.now_ns();
            timing.count += 1;
            timing.total_ns += stop.saturating_sub(start);
            values[(i, j)] = d;
            values[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix {
        values,
        labels,
        sequences,
        timing,
    })
}

/// Builds a matrix directly from precomputed values; for tests and for
/// metric computations on synthetic distances.
pub fn from_values(
    values: DMatrix<f64>,
    labels: Vec<String>,
    sequences: Vec<Option<String>>,
) -> Result<DistanceMatrix> {
    if values.nrows() != values.ncols() || values.nrows() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: alloc::format!("{0}x{0} values", labels.len()),
            actual: alloc::format!("{}x{}", values.nrows(), values.ncols()),
            context: "distance matrix",
        });
    }
    let sequences = if sequences.is_empty() {
        labels.iter().map(|_| None).collect()
    } else if sequences.len() == labels.len() {
        sequences
    } else {
        return Err(Error::ShapeMismatch {
            expected: alloc::format!("{} sequence ids", labels.len()),
            actual: sequences.len().to_string(),
            context: "distance matrix",
        });
    };
    Ok(DistanceMatrix {
        values,
        labels,
        sequences,
        timing: TimingStats::default(),
    })
}
