//! Core algorithms for gait recognition from motion capture data.
//!
//! The crate covers the full in-memory pipeline: skeleton and motion
//! domain types with forward kinematics, gait-cycle extraction by dynamic
//! time warping, identity-discriminative linear feature learning (maximum
//! margin criterion and PCA+LDA), template distances, and the evaluation
//! machinery (data splits, cross-validated classification, class
//! separability coefficients and threshold metrics).
//!
//! Everything here is `no_std` (with `alloc`): timing is injected through
//! the [`clock::Clock`] trait and all randomness flows through caller
//! provided seeded generators, so results are reproducible anywhere. File
//! formats, parsers and the command-line harness live in the companion
//! `gaitlab` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod clock;
pub mod cycles;
pub mod dtw;
pub mod error;
pub mod eval;
pub mod extractors;
pub mod motion;
pub mod sample;
pub mod scatter;
pub mod skeleton;
pub mod template;
pub mod transform;

pub use clock::{Clock, NullClock};
pub use cycles::{extract_gait_cycles, find_gait_cycles, CycleMatch, CycleSearch};
pub use dtw::{dtw_distance, LocalCost, WarpSpec};
pub use error::{Error, Result};
pub use eval::{
    classify_wta, cross_validate, distance_matrix, run_experiment, separability, CvMode,
    DistanceMatrix, EvaluationReport, Method, Preset, Separability, SetupConfig, SetupKind,
};
pub use extractors::{Extractor, ExtractorRegistry, JointMap, RandomClassifier};
pub use motion::{
    forward_kinematics, normalize_root, BoneRotationSequence, ChannelId, JointCoordinateSequence,
};
pub use sample::{time_normalize, unflatten, Class, GaitSample, LabeledDataset, Modality};
pub use scatter::{scatter_matrices, ScatterTriple};
pub use skeleton::{prototypical_skeleton, AngleUnit, Bone, Dof, RotAxis, Skeleton};
pub use template::{
    mahalanobis, GaitTemplate, MahalanobisMetric, TemplateData, TemplateDistance,
};
pub use transform::{
    learn_mmc, learn_pcalda, mmc_objective, project, FeatureTransform, LearnedMethod, LearnedOn,
};
