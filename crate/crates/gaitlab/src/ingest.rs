//! Corpus ingestion: parse ASF/AMC pairs, build the prototypical
//! skeleton, detect gait cycles, time-normalize, and filter subjects.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gaitlab_core::{
    extract_gait_cycles, find_gait_cycles, forward_kinematics, normalize_root,
    prototypical_skeleton, time_normalize, CycleSearch, GaitSample, LabeledDataset, Modality,
    Skeleton,
};
use rayon::prelude::*;

use crate::amc::parse_amc;
use crate::asf::parse_asf;
use crate::manifest::{DatasetManifest, ExcludedSubject, MANIFEST_VERSION};

/// One subject's skeleton file paired with one of their motion files.
#[derive(Debug, Clone)]
pub struct RawMotionFilePair {
    pub asf_text: String,
    pub amc_text: String,
    pub subject: String,
    pub sequence: String,
}

/// Ingestion parameters. The cycle-search threshold is required; the
/// normalized length defaults to the rounded mean cycle length.
#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub modality: Modality,
    pub cycle: CycleSearch,
    pub min_samples: usize,
    pub target_frames: Option<usize>,
    pub frame_rate: f64,
}

impl IngestConfig {
    pub fn new(modality: Modality, cycle: CycleSearch) -> Self {
        IngestConfig {
            modality,
            cycle,
            min_samples: 10,
            target_frames: None,
            frame_rate: 120.0,
        }
    }
}

/// A per-file failure; ingestion continues past these.
#[derive(Debug)]
pub struct IngestIssue {
    pub subject: String,
    pub sequence: String,
    pub message: String,
}

/// Result of building a dataset. `dataset` is absent when every subject
/// fell below the minimum sample count; the manifest still records what
/// happened.
#[derive(Debug)]
pub struct BuildOutcome {
    pub dataset: Option<LabeledDataset>,
    pub manifest: DatasetManifest,
    pub issues: Vec<IngestIssue>,
    /// Extracted cycle count per (subject, sequence), before exclusion.
    pub extraction_log: Vec<(String, String, usize)>,
}

/// Runs the ingestion pipeline over parsed file pairs:
/// parse, zero the root channels, (for joint coordinates) run forward
/// kinematics with the prototypical skeleton, detect cycles against the
/// exemplar, time-normalize, and drop subjects with too few samples.
pub fn build_dataset(
    pairs: &[RawMotionFilePair],
    exemplar: &GaitSample,
    cfg: &IngestConfig,
) -> Result<BuildOutcome, gaitlab_core::Error> {
    if exemplar.modality() != Modality::BoneRotations {
        return Err(gaitlab_core::Error::InvalidArgument(
            "cycle exemplar must be a bone-rotation sample".into(),
        ));
    }

    struct Parsed {
        subject: String,
        sequence: String,
        skeleton: Skeleton,
        motion: gaitlab_core::BoneRotationSequence,
    }

    let mut issues: Vec<IngestIssue> = Vec::new();
    let parsed: Vec<Result<Parsed, IngestIssue>> = pairs
        .par_iter()
        .map(|pair| {
            let skeleton = parse_asf(&pair.asf_text).map_err(|e| IngestIssue {
                subject: pair.subject.clone(),
                sequence: pair.sequence.clone(),
                message: format!("ASF: {e}"),
            })?;
            let motion =
                parse_amc(&pair.amc_text, &skeleton, cfg.frame_rate).map_err(|e| IngestIssue {
                    subject: pair.subject.clone(),
                    sequence: pair.sequence.clone(),
                    message: format!("AMC: {e}"),
                })?;
            Ok(Parsed {
                subject: pair.subject.clone(),
                sequence: pair.sequence.clone(),
                skeleton,
                motion: normalize_root(&motion),
            })
        })
        .collect();
    let mut sequences: Vec<Parsed> = Vec::new();
    for item in parsed {
        match item {
            Ok(p) => sequences.push(p),
            Err(issue) => issues.push(issue),
        }
    }

    // One skeleton per subject, in sorted subject order, averaged into the
    // prototypical skeleton shared by everyone.
    let mut per_subject: BTreeMap<&str, &Skeleton> = BTreeMap::new();
    for p in &sequences {
        per_subject.entry(&p.subject).or_insert(&p.skeleton);
    }
    if per_subject.is_empty() {
        return Err(gaitlab_core::Error::InvalidArgument(
            "no parsable motion files".into(),
        ));
    }
    let skeletons: Vec<Skeleton> = per_subject.values().map(|s| (*s).clone()).collect();
    let prototype = prototypical_skeleton(&skeletons)?;

    // Detect and cut cycles per sequence.
    let cut_sequence = |p: &Parsed| -> Result<Vec<GaitSample>, gaitlab_core::Error> {
        match cfg.modality {
            Modality::BoneRotations => {
                extract_gait_cycles(&p.motion, exemplar, &cfg.cycle, &p.subject, &p.sequence)
            }
            Modality::JointCoordinates => {
                let (rotations, _) = p.motion.rotation_channels();
                let matches = find_gait_cycles(&rotations, exemplar.channels(), &cfg.cycle)?;
                let coords = forward_kinematics(&prototype, &p.motion)?;
                matches
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        GaitSample::new(
                            coords.positions().rows(m.start, m.frames).into_owned(),
                            Modality::JointCoordinates,
                            p.subject.clone(),
                            p.sequence.clone(),
                            k as u32,
                            m.frames as u32,
                            p.motion.frame_rate(),
                        )
                    })
                    .collect()
            }
        }
    };
    type Cut = Result<(Vec<GaitSample>, String, String), IngestIssue>;
    let cuts: Vec<Cut> = sequences
        .par_iter()
        .map(|p| {
            cut_sequence(p)
                .map(|s| (s, p.subject.clone(), p.sequence.clone()))
                .map_err(|e| IngestIssue {
                    subject: p.subject.clone(),
                    sequence: p.sequence.clone(),
                    message: format!("cycle extraction: {e}"),
                })
        })
        .collect();

    let mut raw_samples: Vec<GaitSample> = Vec::new();
    let mut extraction_log: Vec<(String, String, usize)> = Vec::new();
    for cut in cuts {
        match cut {
            Ok((samples, subject, sequence)) => {
                extraction_log.push((subject, sequence, samples.len()));
                raw_samples.extend(samples);
            }
            Err(issue) => issues.push(issue),
        }
    }
    extraction_log.sort();

    // Normalized length: configured, or the rounded mean cycle length.
    let target = match cfg.target_frames {
        Some(t) => t,
        None => {
            if raw_samples.is_empty() {
                0
            } else {
                let mean = raw_samples.iter().map(|s| s.frames() as f64).sum::<f64>()
                    / raw_samples.len() as f64;
                mean.round() as usize
            }
        }
    };

    let mut normalized = Vec::with_capacity(raw_samples.len());
    for sample in &raw_samples {
        normalized.push(time_normalize(sample, target.max(2))?);
    }

    // Per-subject counts and the minimum-samples filter.
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &normalized {
        *counts.entry(s.subject().to_string()).or_insert(0) += 1;
    }
    let mut kept: Vec<GaitSample> = Vec::new();
    let mut excluded: Vec<ExcludedSubject> = Vec::new();
    for (subject, &count) in &counts {
        if count < cfg.min_samples {
            excluded.push(ExcludedSubject {
                id: subject.clone(),
                samples: count,
                reason: format!("fewer than {} samples", cfg.min_samples),
            });
        }
    }
    for s in normalized {
        if counts[s.subject()] >= cfg.min_samples {
            kept.push(s);
        }
    }
    kept.sort_by(|a, b| {
        (a.subject(), a.sequence(), a.cycle_index()).cmp(&(
            b.subject(),
            b.sequence(),
            b.cycle_index(),
        ))
    });

    let joint_names = match cfg.modality {
        Modality::JointCoordinates => Some(prototype.joint_names()),
        Modality::BoneRotations => None,
    };

    let provenance = vec![
        format!("modality {}", cfg.modality.code()),
        format!("cycle threshold {}", cfg.cycle.threshold),
        format!(
            "window {}..{} stride {}",
            cfg.cycle.window.0, cfg.cycle.window.1, cfg.cycle.stride
        ),
        match cfg.target_frames {
            Some(t) => format!("normalized length {t} (configured)"),
            None => format!("normalized length {target} (rounded mean cycle length)"),
        },
        format!("frame rate {} Hz", cfg.frame_rate),
        format!("minimum samples per subject {}", cfg.min_samples),
    ];

    if kept.is_empty() {
        let manifest = DatasetManifest {
            format_version: MANIFEST_VERSION,
            modality: cfg.modality.code().to_string(),
            frames: target,
            channel_count: 0,
            joint_names,
            subjects: Vec::new(),
            excluded,
            provenance,
        };
        return Ok(BuildOutcome {
            dataset: None,
            manifest,
            issues,
            extraction_log,
        });
    }

    let dataset = LabeledDataset::new(kept, joint_names)?;
    let mut manifest = DatasetManifest::describe(&dataset);
    manifest.excluded = excluded;
    manifest.provenance = provenance;
    Ok(BuildOutcome {
        dataset: Some(dataset),
        manifest,
        issues,
        extraction_log,
    })
}

/// Scans a corpus directory for `<subject>.asf` files and their
/// `<subject>_<sequence>.amc` siblings, CMU layout.
pub fn scan_corpus(root: &Path) -> std::io::Result<Vec<(String, PathBuf, String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("asf") {
            continue;
        }
        let subject = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let dir = path.parent().unwrap_or(root);
        let mut amcs: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.extension().and_then(|e| e.to_str()) == Some("amc")
                    && p.file_stem()
                        .and_then(|s| s.to_str())
                        .map(|s| s.starts_with(&format!("{subject}_")))
                        .unwrap_or(false)
            })
            .collect();
        amcs.sort();
        for amc in amcs {
            let sequence = amc
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            out.push((subject.clone(), path.to_path_buf(), sequence, amc));
        }
    }
    Ok(out)
}

/// Reads file pairs from a corpus scan.
pub fn read_pairs(
    scan: &[(String, PathBuf, String, PathBuf)],
) -> std::io::Result<Vec<RawMotionFilePair>> {
    scan.iter()
        .map(|(subject, asf, sequence, amc)| {
            Ok(RawMotionFilePair {
                asf_text: std::fs::read_to_string(asf)?,
                amc_text: std::fs::read_to_string(amc)?,
                subject: subject.clone(),
                sequence: sequence.clone(),
            })
        })
        .collect()
}
