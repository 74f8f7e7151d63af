use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sample::LabeledDataset;

/// Homogeneous split: samples `class_count` identities, then divides each
/// selected class into a learning fraction (rounded up) and an evaluation
/// remainder. Both parts cover the same identities.
pub fn split_homogeneous<R: Rng>(
    dataset: &LabeledDataset,
    class_count: usize,
    learn_ratio: f64,
    rng: &mut R,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(learn_ratio > 0.0 && learn_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "learning ratio must lie in (0, 1), got {learn_ratio}"
        )));
    }
    let chosen = choose_classes(dataset, class_count, rng)?;
    let mut learning = Vec::new();
    let mut evaluation = Vec::new();
    for &ci in &chosen {
        let class = &dataset.classes()[ci];
        let mut indices: Vec<usize> = class.indices().to_vec();
        indices.shuffle(rng);
        let take = libm::ceil(learn_ratio * class.len() as f64) as usize;
        if take == 0 || take >= class.len() {
            return Err(Error::InvalidSplit(format!(
                "class `{}` with {} samples would leave one side empty at ratio {learn_ratio}",
                class.label(),
                class.len()
            )));
        }
        learning.extend_from_slice(&indices[..take]);
        evaluation.extend_from_slice(&indices[take..]);
    }
    learning.sort_unstable();
    evaluation.sort_unstable();
    Ok((dataset.subset(&learning)?, dataset.subset(&evaluation)?))
}

/// Heterogeneous split: samples `learn_classes + eval_classes` identities
/// and assigns all samples of the first group to learning and all samples
/// of the second to evaluation. The identity sets are disjoint.
pub fn split_heterogeneous<R: Rng>(
    dataset: &LabeledDataset,
    learn_classes: usize,
    eval_classes: usize,
    rng: &mut R,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let chosen = choose_classes(dataset, learn_classes + eval_classes, rng)?;
    let mut learning = Vec::new();
    let mut evaluation = Vec::new();
    for (k, &ci) in chosen.iter().enumerate() {
        let indices = dataset.classes()[ci].indices();
        if k < learn_classes {
            learning.extend_from_slice(indices);
        } else {
            evaluation.extend_from_slice(indices);
        }
    }
    learning.sort_unstable();
    evaluation.sort_unstable();
    Ok((dataset.subset(&learning)?, dataset.subset(&evaluation)?))
}

fn choose_classes<R: Rng>(
    dataset: &LabeledDataset,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::InvalidArgument("cannot select zero classes".into()));
    }
    if count > dataset.class_count() {
        return Err(Error::InvalidArgument(format!(
            "requested {count} classes but the dataset has {}",
            dataset.class_count()
        )));
    }
    let mut all: Vec<usize> = (0..dataset.class_count()).collect();
    all.shuffle(rng);
    all.truncate(count);
    Ok(all)
}
