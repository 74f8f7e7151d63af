//! MoCap gait recognition toolkit: ASF/AMC ingestion, dataset and
//! transform archives, a synthetic data generator, report emission, and
//! the command-line harness. The algorithms live in `gaitlab-core`.

pub mod amc;
pub mod archive;
pub mod asf;
pub mod clock;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod reports;
pub mod synth;

pub use gaitlab_core as core;

pub use amc::parse_amc;
pub use archive::{load_dataset, load_transform, save_dataset, save_transform};
pub use asf::{parse_asf, write_asf};
pub use clock::StdClock;
pub use error::{ArchiveError, ParseError};
pub use ingest::{build_dataset, BuildOutcome, IngestConfig, RawMotionFilePair};
pub use manifest::DatasetManifest;
pub use synth::SynthConfig;
