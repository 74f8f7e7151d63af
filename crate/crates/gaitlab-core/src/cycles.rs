use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::dtw::{dtw_distance, LocalCost, WarpSpec};
use crate::error::{Error, Result};
use crate::motion::BoneRotationSequence;
use crate::sample::{GaitSample, Modality};

/// Sub-sequence search parameters for gait-cycle extraction.
///
/// The DTW threshold is a required configuration value; it is never
/// inferred from the data.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSearch {
    /// Maximum admissible DTW distance to the exemplar.
    pub threshold: f64,
    /// Candidate lengths as multiples of the exemplar length, `lo < 1 < hi`.
    pub window: (f64, f64),
    /// Step between candidate start frames.
    pub stride: usize,
    /// Local cost of the cycle-search DTW.
    pub local_cost: LocalCost,
}

impl CycleSearch {
    pub fn new(threshold: f64) -> Self {
        CycleSearch {
            threshold,
            window: (0.7, 1.3),
            stride: 5,
            local_cost: LocalCost::L1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cycle threshold must be positive, got {}",
                self.threshold
            )));
        }
        let (lo, hi) = self.window;
        if !(lo > 0.0 && lo < 1.0 && hi > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "window scale must satisfy 0 < lo < 1 < hi, got ({lo}, {hi})"
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// One accepted sub-sequence: frame range and DTW distance to the exemplar.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleMatch {
    pub start: usize,
    pub frames: usize,
    pub distance: f64,
}

impl CycleMatch {
    fn overlaps(&self, other: &CycleMatch) -> bool {
        self.start < other.start + other.frames && other.start < self.start + self.frames
    }
}

/// Scans sub-sequences of a channel matrix for gait cycles.
///
/// Candidate windows of every length in `window x exemplar_frames` are
/// generated at the configured stride, scored by DTW against the exemplar,
/// filtered by the threshold, and greedily selected non-overlapping in
/// ascending distance order. Matches are returned in chronological order.
pub fn find_gait_cycles(
    sequence: &DMatrix<f64>,
    exemplar: &DMatrix<f64>,
    cfg: &CycleSearch,
) -> Result<Vec<CycleMatch>> {
    cfg.validate()?;
    if exemplar.nrows() < 2 {
        return Err(Error::InvalidArgument(
            "exemplar must have at least 2 frames".into(),
        ));
    }
    if sequence.ncols() != exemplar.ncols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} channels", exemplar.ncols()),
            actual: format!("{} channels", sequence.ncols()),
            context: "find_gait_cycles",
        });
    }
    let e = exemplar.nrows() as f64;
    let min_len = (libm::ceil(cfg.window.0 * e) as usize).max(2);
    let max_len = libm::floor(cfg.window.1 * e) as usize;
    let total = sequence.nrows();
    let spec = WarpSpec {
        local_cost: cfg.local_cost,
    };

    let mut candidates: Vec<CycleMatch> = Vec::new();
    for len in min_len..=max_len.min(total) {
        let mut start = 0;
        while start + len <= total {
            let window = sequence.rows(start, len).into_owned();
            let distance = dtw_distance(&window, exemplar, spec)?;
            if distance <= cfg.threshold {
                candidates.push(CycleMatch {
                    start,
                    frames: len,
                    distance,
                });
            }
            start += cfg.stride;
        }
    }

    candidates.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.start.cmp(&b.start))
            .then(a.frames.cmp(&b.frames))
    });
    let mut selected: Vec<CycleMatch> = Vec::new();
    for cand in candidates {
        if selected.iter().all(|kept| !kept.overlaps(&cand)) {
            selected.push(cand);
        }
    }
    selected.sort_by_key(|m| m.start);
    Ok(selected)
}

/// Extracts bone-rotation gait samples from a motion sequence.
///
/// Cycle detection runs on the rotational channels; the exemplar must be a
/// bone-rotation sample with the same channel count. Returned samples are
/// not yet time-normalized.
pub fn extract_gait_cycles(
    motion: &BoneRotationSequence,
    exemplar: &GaitSample,
    cfg: &CycleSearch,
    subject: &str,
    sequence_id: &str,
) -> Result<Vec<GaitSample>> {
    if exemplar.modality() != Modality::BoneRotations {
        return Err(Error::InvalidArgument(
            "cycle exemplar must be a bone-rotation sample".into(),
        ));
    }
    let (rotations, _) = motion.rotation_channels();
    let matches = find_gait_cycles(&rotations, exemplar.channels(), cfg)?;
    matches
        .iter()
        .enumerate()
        .map(|(k, m)| {
            GaitSample::new(
                rotations.rows(m.start, m.frames).into_owned(),
                Modality::BoneRotations,
                String::from(subject),
                String::from(sequence_id),
                k as u32,
                m.frames as u32,
                motion.frame_rate(),
            )
        })
        .collect()
}
