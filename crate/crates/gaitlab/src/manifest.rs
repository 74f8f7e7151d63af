use gaitlab_core::LabeledDataset;
use serde::{Deserialize, Serialize};

use crate::error::ArchiveError;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectCount {
    pub id: String,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedSubject {
    pub id: String,
    pub samples: usize,
    pub reason: String,
}

/// Self-describing summary of a dataset: modality, normalized length,
/// per-subject sample counts, exclusions and provenance notes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    /// "BR" or "JC".
    pub modality: String,
    /// Normalized frame count per sample.
    pub frames: usize,
    pub channel_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_names: Option<Vec<String>>,
    pub subjects: Vec<SubjectCount>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<ExcludedSubject>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
}

impl DatasetManifest {
    /// Summarizes an in-memory dataset; provenance and exclusions are
    /// filled in by the producer.
    pub fn describe(dataset: &LabeledDataset) -> Self {
        DatasetManifest {
            format_version: MANIFEST_VERSION,
            modality: dataset.modality().code().to_string(),
            frames: dataset.frames(),
            channel_count: dataset.channel_count(),
            joint_names: dataset.joint_names().map(|n| n.to_vec()),
            subjects: dataset
                .classes()
                .iter()
                .map(|c| SubjectCount {
                    id: c.label().to_string(),
                    samples: c.len(),
                })
                .collect(),
            excluded: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn total_samples(&self) -> usize {
        self.subjects.iter().map(|s| s.samples).sum()
    }

    /// Checks the manifest's counts and shape against an actual dataset.
    pub fn validate_against(&self, dataset: &LabeledDataset) -> Result<(), ArchiveError> {
        let recomputed = DatasetManifest {
            excluded: self.excluded.clone(),
            provenance: self.provenance.clone(),
            ..DatasetManifest::describe(dataset)
        };
        if recomputed != *self {
            return Err(ArchiveError::Inconsistent(
                "manifest does not match the stored samples".to_string(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gaitlab_core::{GaitSample, Modality};
    use nalgebra::DMatrix;

    fn dataset() -> LabeledDataset {
        let mk = |subject: &str, k: u32| {
            GaitSample::new(
                DMatrix::from_element(2, 3, 0.5),
                Modality::BoneRotations,
                subject,
                format!("{subject}_{k}"),
                k,
                2,
                120.0,
            )
            .unwrap()
        };
        LabeledDataset::new(vec![mk("a", 0), mk("a", 1), mk("b", 0)], None).unwrap()
    }

    #[test]
    fn describe_counts_subjects() {
        let m = DatasetManifest::describe(&dataset());
        assert_eq!(m.total_samples(), 3);
        assert_eq!(m.subjects.len(), 2);
        assert_eq!(m.subjects[0].id, "a");
        assert_eq!(m.subjects[0].samples, 2);
        m.validate_against(&dataset()).unwrap();
    }

    #[test]
    fn validation_catches_count_drift() {
        let mut m = DatasetManifest::describe(&dataset());
        m.subjects[0].samples = 5;
        assert!(m.validate_against(&dataset()).is_err());
    }
}
