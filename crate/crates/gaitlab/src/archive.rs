//! Archive container for datasets and learned transforms: a magic tag, a
//! UTF-8 JSON header with a SHA-256 checksum, and a little-endian f64
//! payload block. Round trips are bit-exact.

use std::fs;
use std::path::Path;

use gaitlab_core::{
    FeatureTransform, GaitSample, LabeledDataset, LearnedMethod, LearnedOn, Modality,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ArchiveError;
use crate::manifest::DatasetManifest;

const MAGIC: &[u8; 8] = b"GAITLAB\x01";
const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ArchiveHeader {
    format_version: u32,
    kind: String,
    payload_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dataset: Option<DatasetHeader>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transform: Option<TransformHeader>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    manifest: DatasetManifest,
    index: Vec<SampleIndexEntry>,
}

/// Index table entry addressing one sample inside the payload block.
/// Offsets count f64 values from the start of the payload.
#[derive(Debug, Serialize, Deserialize)]
struct SampleIndexEntry {
    subject: String,
    sequence: String,
    cycle: u32,
    offset: u64,
    frames: usize,
    channels: usize,
    source_frames: u32,
    frame_rate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformHeader {
    method: String,
    input_dim: usize,
    output_dim: usize,
    eigenvalues: Vec<f64>,
    learned_classes: usize,
    learned_samples: usize,
    learned_modality: String,
    learned_frames: usize,
}

fn write_archive(
    path: &Path,
    header: &ArchiveHeader,
    payload: &[u8],
) -> Result<(), ArchiveError> {
    let header_json = serde_json::to_vec(header)?;
    let mut bytes = Vec::with_capacity(12 + header_json.len() + payload.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header_json);
    bytes.extend_from_slice(payload);
    fs::write(path, bytes)?;
    Ok(())
}

fn read_archive(path: &Path, expected_kind: &'static str) -> Result<(ArchiveHeader, Vec<u8>), ArchiveError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(ArchiveError::BadMagic);
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    if bytes.len() < 12 + header_len {
        return Err(ArchiveError::ChecksumMismatch);
    }
    let header: ArchiveHeader = serde_json::from_slice(&bytes[12..12 + header_len])?;
    if header.format_version != ARCHIVE_VERSION {
        return Err(ArchiveError::UnsupportedVersion {
            found: header.format_version,
        });
    }
    if header.kind != expected_kind {
        return Err(ArchiveError::WrongKind {
            expected: expected_kind,
            found: header.kind,
        });
    }
    let payload = bytes[12 + header_len..].to_vec();
    let digest = hex::encode(Sha256::digest(&payload));
    if digest != header.payload_sha256 {
        return Err(ArchiveError::ChecksumMismatch);
    }
    Ok((header, payload))
}

fn floats_to_bytes(values: impl Iterator<Item = f64>) -> Vec<u8> {
    let mut out = Vec::new();
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn bytes_to_floats(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect()
}

/// Frame-major traversal of a sample's channel matrix.
fn sample_values(sample: &GaitSample) -> impl Iterator<Item = f64> + '_ {
    let cols = sample.channel_count();
    (0..sample.frames() * cols).map(move |k| sample.channels()[(k / cols, k % cols)])
}

/// Writes a dataset and its manifest as one archive file.
pub fn save_dataset(
    dataset: &LabeledDataset,
    manifest: &DatasetManifest,
    path: impl AsRef<Path>,
) -> Result<(), ArchiveError> {
    manifest.validate_against(dataset)?;
    let mut index = Vec::with_capacity(dataset.len());
    let mut payload = Vec::new();
    let mut offset = 0u64;
    for sample in dataset.samples() {
        index.push(SampleIndexEntry {
            subject: sample.subject().to_string(),
            sequence: sample.sequence().to_string(),
            cycle: sample.cycle_index(),
            offset,
            frames: sample.frames(),
            channels: sample.channel_count(),
            source_frames: sample.source_frames(),
            frame_rate: sample.frame_rate(),
        });
        payload.extend_from_slice(&floats_to_bytes(sample_values(sample)));
        offset += (sample.frames() * sample.channel_count()) as u64;
    }
    let header = ArchiveHeader {
        format_version: ARCHIVE_VERSION,
        kind: "dataset".to_string(),
        payload_sha256: hex::encode(Sha256::digest(&payload)),
        dataset: Some(DatasetHeader {
            manifest: manifest.clone(),
            index,
        }),
        transform: None,
    };
    write_archive(path.as_ref(), &header, &payload)
}

/// Loads a dataset archive, verifying the checksum and the manifest
/// counts.
pub fn load_dataset(
    path: impl AsRef<Path>,
) -> Result<(LabeledDataset, DatasetManifest), ArchiveError> {
    let (header, payload) = read_archive(path.as_ref(), "dataset")?;
    let dataset_header = header
        .dataset
        .ok_or_else(|| ArchiveError::Inconsistent("dataset header missing".to_string()))?;
    let values = bytes_to_floats(&payload);
    let modality = Modality::parse(&dataset_header.manifest.modality).ok_or_else(|| {
        ArchiveError::Inconsistent(format!(
            "unknown modality `{}`",
            dataset_header.manifest.modality
        ))
    })?;
    let mut samples = Vec::with_capacity(dataset_header.index.len());
    for entry in &dataset_header.index {
        let start = entry.offset as usize;
        let len = entry.frames * entry.channels;
        if start + len > values.len() {
            return Err(ArchiveError::Inconsistent(format!(
                "index entry for `{}` points past the payload",
                entry.subject
            )));
        }
        let mut channels = DMatrix::zeros(entry.frames, entry.channels);
        for k in 0..len {
            channels[(k / entry.channels, k % entry.channels)] = values[start + k];
        }
        samples.push(GaitSample::new(
            channels,
            modality,
            entry.subject.clone(),
            entry.sequence.clone(),
            entry.cycle,
            entry.source_frames,
            entry.frame_rate,
        )?);
    }
    let dataset = LabeledDataset::new(samples, dataset_header.manifest.joint_names.clone())?;
    dataset_header.manifest.validate_against(&dataset)?;
    Ok((dataset, dataset_header.manifest))
}

fn matrix_values(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    let cols = m.ncols();
    (0..m.nrows() * cols).map(move |k| m[(k / cols, k % cols)])
}

/// Writes a learned transform (projection and feature-space total-scatter
/// inverse) in the same archive scheme as datasets.
pub fn save_transform(
    transform: &FeatureTransform,
    path: impl AsRef<Path>,
) -> Result<(), ArchiveError> {
    let mut payload = floats_to_bytes(matrix_values(transform.projection()));
    payload.extend_from_slice(&floats_to_bytes(matrix_values(transform.inverse_total())));
    let header = ArchiveHeader {
        format_version: ARCHIVE_VERSION,
        kind: "transform".to_string(),
        payload_sha256: hex::encode(Sha256::digest(&payload)),
        dataset: None,
        transform: Some(TransformHeader {
            method: transform.method().code().to_string(),
            input_dim: transform.input_dim(),
            output_dim: transform.output_dim(),
            eigenvalues: transform.eigenvalues().to_vec(),
            learned_classes: transform.learned_on().classes,
            learned_samples: transform.learned_on().samples,
            learned_modality: transform.learned_on().modality.code().to_string(),
            learned_frames: transform.learned_on().frames,
        }),
    };
    write_archive(path.as_ref(), &header, &payload)
}

/// Loads a transform archive.
pub fn load_transform(path: impl AsRef<Path>) -> Result<FeatureTransform, ArchiveError> {
    let (header, payload) = read_archive(path.as_ref(), "transform")?;
    let t = header
        .transform
        .ok_or_else(|| ArchiveError::Inconsistent("transform header missing".to_string()))?;
    let values = bytes_to_floats(&payload);
    let proj_len = t.input_dim * t.output_dim;
    let inv_len = t.output_dim * t.output_dim;
    if values.len() != proj_len + inv_len {
        return Err(ArchiveError::Inconsistent(
            "transform payload has the wrong size".to_string(),
        ));
    }
    let projection = DMatrix::from_row_slice(t.input_dim, t.output_dim, &values[..proj_len]);
    let inverse_total = DMatrix::from_row_slice(t.output_dim, t.output_dim, &values[proj_len..]);
    let method = LearnedMethod::parse(&t.method)
        .ok_or_else(|| ArchiveError::Inconsistent(format!("unknown method `{}`", t.method)))?;
    let modality = Modality::parse(&t.learned_modality).ok_or_else(|| {
        ArchiveError::Inconsistent(format!("unknown modality `{}`", t.learned_modality))
    })?;
    Ok(FeatureTransform::from_parts(
        projection,
        inverse_total,
        method,
        t.eigenvalues,
        LearnedOn {
            classes: t.learned_classes,
            samples: t.learned_samples,
            modality,
            frames: t.learned_frames,
        },
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        for c in 0..3 {
            for k in 0..4u32 {
                let channels = DMatrix::from_fn(5, 2, |_, _| rng.gen_range(-10.0..10.0));
                samples.push(
                    GaitSample::new(
                        channels,
                        Modality::BoneRotations,
                        format!("id{c:02}"),
                        format!("id{c:02}_s{}", k / 2),
                        k % 2,
                        7,
                        120.0,
                    )
                    .unwrap(),
                );
            }
        }
        LabeledDataset::new(samples, None).unwrap()
    }

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.glb");
        let ds = random_dataset(5);
        let manifest = DatasetManifest::describe(&ds);
        save_dataset(&ds, &manifest, &path).unwrap();
        let (back, manifest_back) = load_dataset(&path).unwrap();
        assert_eq!(back, ds);
        assert_eq!(manifest_back, manifest);
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.glb");
        let ds = random_dataset(6);
        save_dataset(&ds, &DatasetManifest::describe(&ds), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(ArchiveError::ChecksumMismatch)
        ));
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.glb");
        let ds = random_dataset(7);
        save_dataset(&ds, &DatasetManifest::describe(&ds), &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(ArchiveError::ChecksumMismatch)
        ));
    }

    #[test]
    fn version_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.glb");
        let ds = random_dataset(8);
        save_dataset(&ds, &DatasetManifest::describe(&ds), &path).unwrap();
        // Rewrite the header with a bumped version.
        let bytes = fs::read(&path).unwrap();
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let mut header: ArchiveHeader =
            serde_json::from_slice(&bytes[12..12 + header_len]).unwrap();
        header.format_version = 99;
        let new_header = serde_json::to_vec(&header).unwrap();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(new_header.len() as u32).to_le_bytes());
        out.extend_from_slice(&new_header);
        out.extend_from_slice(&bytes[12 + header_len..]);
        fs::write(&path, out).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(ArchiveError::UnsupportedVersion { found: 99 })
        ));
    }

    #[test]
    fn wrong_kind_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.glb");
        let ds = random_dataset(9);
        save_dataset(&ds, &DatasetManifest::describe(&ds), &path).unwrap();
        assert!(matches!(
            load_transform(&path),
            Err(ArchiveError::WrongKind { .. })
        ));
    }

    #[test]
    fn transform_round_trip() {
        use gaitlab_core::learn_mmc;
        let ds = {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut samples = Vec::new();
            for c in 0..3 {
                let center: Vec<f64> = (0..6).map(|_| rng.gen_range(-5.0..5.0)).collect();
                for k in 0..5u32 {
                    let channels =
                        DMatrix::from_fn(2, 3, |t, j| center[t * 3 + j] + rng.gen_range(-0.3..0.3));
                    samples.push(
                        GaitSample::new(
                            channels,
                            Modality::BoneRotations,
                            format!("id{c:02}"),
                            format!("id{c:02}_{k}"),
                            k,
                            2,
                            120.0,
                        )
                        .unwrap(),
                    );
                }
            }
            LabeledDataset::new(samples, None).unwrap()
        };
        let t = learn_mmc(&ds, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mmc.glt");
        save_transform(&t, &path).unwrap();
        let back = load_transform(&path).unwrap();
        assert_eq!(back.projection(), t.projection());
        assert_eq!(back.inverse_total(), t.inverse_total());
        assert_eq!(back.eigenvalues(), t.eigenvalues());
        assert_eq!(back.method(), t.method());
        assert_eq!(back.learned_on(), t.learned_on());
    }

    #[test]
    fn saving_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.glb");
        let b = dir.path().join("b.glb");
        let ds = random_dataset(10);
        let manifest = DatasetManifest::describe(&ds);
        save_dataset(&ds, &manifest, &a).unwrap();
        save_dataset(&ds, &manifest, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}
