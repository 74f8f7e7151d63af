use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Raw form a gait sample is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    /// Bone rotation channels straight from the motion data.
    BoneRotations,
    /// 3D joint coordinates reconstructed by forward kinematics.
    JointCoordinates,
}

impl Modality {
    pub fn code(&self) -> &'static str {
        match self {
            Modality::BoneRotations => "BR",
            Modality::JointCoordinates => "JC",
        }
    }

    pub fn parse(code: &str) -> Option<Modality> {
        match code.to_ascii_uppercase().as_str() {
            "BR" => Some(Modality::BoneRotations),
            "JC" => Some(Modality::JointCoordinates),
            _ => None,
        }
    }
}

/// One gait cycle: a frames-by-channels measurement matrix plus identity
/// and provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitSample {
    channels: DMatrix<f64>,
    modality: Modality,
    subject: String,
    sequence: String,
    cycle_index: u32,
    /// Frame count of the cycle before any time normalization.
    source_frames: u32,
    frame_rate: f64,
}

impl GaitSample {
    pub fn new(
        channels: DMatrix<f64>,
        modality: Modality,
        subject: impl Into<String>,
        sequence: impl Into<String>,
        cycle_index: u32,
        source_frames: u32,
        frame_rate: f64,
    ) -> Result<Self> {
        if channels.nrows() == 0 || channels.ncols() == 0 {
            return Err(Error::InvalidArgument("gait sample has no data".into()));
        }
        if frame_rate.is_nan() || frame_rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        Ok(GaitSample {
            channels,
            modality,
            subject: subject.into(),
            sequence: sequence.into(),
            cycle_index,
            source_frames,
            frame_rate,
        })
    }

    pub fn channels(&self) -> &DMatrix<f64> {
        &self.channels
    }

    pub fn frames(&self) -> usize {
        self.channels.nrows()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.ncols()
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn sequence(&self) -> &str {
        &self.sequence
    }

    pub fn cycle_index(&self) -> u32 {
        self.cycle_index
    }

    pub fn source_frames(&self) -> u32 {
        self.source_frames
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    /// Duration of the original (pre-normalization) cycle in seconds.
    pub fn duration_s(&self) -> f64 {
        self.source_frames as f64 / self.frame_rate
    }

    /// Sample-space vector in frame-major order: all channels of frame 1,
    /// then frame 2, and so on. Dimension is `frames * channel_count`.
    pub fn flatten(&self) -> DVector<f64> {
        let (t, c) = (self.frames(), self.channel_count());
        let mut v = DVector::zeros(t * c);
        for frame in 0..t {
            for ch in 0..c {
                v[frame * c + ch] = self.channels[(frame, ch)];
            }
        }
        v
    }
}

/// Inverse of [`GaitSample::flatten`] given the frame and channel counts.
pub fn unflatten(v: &DVector<f64>, frames: usize, channel_count: usize) -> Result<DMatrix<f64>> {
    if v.len() != frames * channel_count {
        return Err(Error::ShapeMismatch {
            expected: format!("{} values", frames * channel_count),
            actual: format!("{} values", v.len()),
            context: "unflatten",
        });
    }
    let mut m = DMatrix::zeros(frames, channel_count);
    for frame in 0..frames {
        for ch in 0..channel_count {
            m[(frame, ch)] = v[frame * channel_count + ch];
        }
    }
    Ok(m)
}

/// Resamples every channel to exactly `target_frames` frames by
/// piecewise-linear interpolation over normalized time; first and last
/// frames are preserved exactly.
pub fn time_normalize(sample: &GaitSample, target_frames: usize) -> Result<GaitSample> {
    if target_frames < 2 {
        return Err(Error::InvalidArgument(format!(
            "target frame count must be at least 2, got {target_frames}"
        )));
    }
    if sample.frames() < 2 {
        return Err(Error::InvalidArgument(
            "cannot time-normalize a sample with fewer than 2 frames".into(),
        ));
    }
    let t_in = sample.frames();
    if target_frames == t_in {
        return Ok(sample.clone());
    }
    let cols = sample.channel_count();
    let mut out = DMatrix::zeros(target_frames, cols);
    let span_in = (t_in - 1) as f64;
    let span_out = (target_frames - 1) as f64;
    for i in 0..target_frames {
        let x = (i as f64 * span_in) / span_out;
        let j = libm::floor(x) as usize;
        let (j, w) = if j >= t_in - 1 {
            (t_in - 1, 0.0)
        } else {
            (j, x - j as f64)
        };
        let j_next = (j + 1).min(t_in - 1);
        for c in 0..cols {
            out[(i, c)] =
                (1.0 - w) * sample.channels[(j, c)] + w * sample.channels[(j_next, c)];
        }
    }
    let mut normalized = sample.clone();
    normalized.channels = out;
    Ok(normalized)
}

/// One identity class within a labeled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Class {
    label: String,
    indices: Vec<usize>,
}

impl Class {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Labeled gait samples partitioned into identity classes.
///
/// All samples share the modality, frame count and channel count; classes
/// are complete and mutually exclusive by construction. `joint_names` is
/// present on joint-coordinate datasets and names the 3-column blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<GaitSample>,
    classes: Vec<Class>,
    modality: Modality,
    frames: usize,
    channel_count: usize,
    joint_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<GaitSample>, joint_names: Option<Vec<String>>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("dataset has no samples".into()))?;
        let modality = first.modality();
        let frames = first.frames();
        let channel_count = first.channel_count();
        for (i, s) in samples.iter().enumerate() {
            if s.modality() != modality {
                return Err(Error::InvalidArgument(format!(
                    "sample {i} has modality {} but the dataset is {}",
                    s.modality().code(),
                    modality.code()
                )));
            }
            if s.frames() != frames || s.channel_count() != channel_count {
                return Err(Error::ShapeMismatch {
                    expected: format!("{frames}x{channel_count}"),
                    actual: format!("{}x{}", s.frames(), s.channel_count()),
                    context: "labeled dataset",
                });
            }
        }
        if let Some(names) = &joint_names {
            if modality != Modality::JointCoordinates {
                return Err(Error::InvalidArgument(
                    "joint names are only meaningful for joint-coordinate datasets".into(),
                ));
            }
            if names.len() * 3 != channel_count {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} joints", channel_count / 3),
                    actual: format!("{} joints", names.len()),
                    context: "labeled dataset joint names",
                });
            }
        }

        let mut labels: Vec<String> = samples.iter().map(|s| s.subject().to_string()).collect();
        labels.sort();
        labels.dedup();
        let classes = labels
            .into_iter()
            .map(|label| {
                let indices = samples
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.subject() == label)
                    .map(|(i, _)| i)
                    .collect();
                Class { label, indices }
            })
            .collect();

        Ok(LabeledDataset {
            samples,
            classes,
            modality,
            frames,
            channel_count,
            joint_names,
        })
    }

    pub fn samples(&self) -> &[GaitSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn classes(&self) -> &[Class] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    /// Flattened sample-space dimensionality `D = frames * channel_count`.
    pub fn dimension(&self) -> usize {
        self.frames * self.channel_count
    }

    pub fn joint_names(&self) -> Option<&[String]> {
        self.joint_names.as_deref()
    }

    /// New dataset from a subset of sample indices.
    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let samples = indices.iter().map(|&i| self.samples[i].clone()).collect();
        LabeledDataset::new(samples, self.joint_names.clone())
    }

    /// D-by-N matrix whose columns are the flattened samples.
    pub fn data_matrix(&self) -> DMatrix<f64> {
        let d = self.dimension();
        let mut m = DMatrix::zeros(d, self.len());
        for (n, s) in self.samples.iter().enumerate() {
            m.set_column(n, &s.flatten());
        }
        m
    }
}
