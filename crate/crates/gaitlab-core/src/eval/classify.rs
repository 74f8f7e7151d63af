use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::distance_matrix::DistanceMatrix;
use crate::extractors::RandomClassifier;
use crate::template::{GaitTemplate, TemplateData, TemplateDistance};

/// Winner-takes-all classification: the label of the gallery template at
/// minimal distance, ties broken by the lowest gallery index.
pub fn classify_wta(
    probe: &TemplateData,
    gallery: &[GaitTemplate],
    metric: &TemplateDistance,
) -> Result<String> {
    if gallery.is_empty() {
        return Err(Error::InvalidArgument("gallery is empty".into()));
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, g) in gallery.iter().enumerate() {
        let d = metric.distance(probe, &g.data)?;
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    let (_, idx) = best.expect("gallery non-empty");
    gallery[idx]
        .label
        .clone()
        .ok_or_else(|| Error::InvalidArgument("gallery template has no label".into()))
}

/// Cross-validation flavor: plain fold assignment over templates, or the
/// grouped variant that keeps all cycles of one walk sequence in the same
/// fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvMode {
    Nested,
    SequenceGrouped,
}

impl CvMode {
    pub fn code(&self) -> &'static str {
        match self {
            CvMode::Nested => "nested",
            CvMode::SequenceGrouped => "grouped",
        }
    }

    pub fn parse(code: &str) -> Option<CvMode> {
        match code.to_ascii_lowercase().as_str() {
            "nested" => Some(CvMode::Nested),
            "grouped" | "sequence-grouped" => Some(CvMode::SequenceGrouped),
            _ => None,
        }
    }
}

/// Fold id per template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    folds: Vec<usize>,
    fold_count: usize,
}

impl FoldAssignment {
    pub fn fold_of(&self, template: usize) -> usize {
        self.folds[template]
    }

    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn assignments(&self) -> &[usize] {
        &self.folds
    }
}

/// Assigns templates to `k` folds.
///
/// Nested mode shuffles templates and deals them round-robin. Grouped mode
/// shuffles sequence ids and assigns each whole sequence to the currently
/// smallest fold, so cycles of a common walk sequence are never split.
pub fn assign_folds<R: Rng>(
    sequences: &[Option<String>],
    mode: CvMode,
    k: usize,
    rng: &mut R,
) -> Result<FoldAssignment> {
    let n = sequences.len();
    if k < 2 {
        return Err(Error::InvalidArgument("cross-validation needs k >= 2".into()));
    }
    if n < k {
        return Err(Error::InvalidArgument(alloc::format!(
            "cannot make {k} folds from {n} templates"
        )));
    }
    let mut folds = alloc::vec![0usize; n];
    match mode {
        CvMode::Nested => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            for (pos, &idx) in order.iter().enumerate() {
                folds[idx] = pos % k;
            }
        }
        CvMode::SequenceGrouped => {
            let mut ids: Vec<&String> = Vec::new();
            for s in sequences {
                match s {
                    Some(id) => {
                        if !ids.contains(&id) {
                            ids.push(id);
                        }
                    }
                    None => {
                        return Err(Error::InvalidArgument(
                            "grouped cross-validation needs sequence ids on every template"
                                .into(),
                        ))
                    }
                }
            }
            ids.sort();
            if ids.len() < k {
                return Err(Error::InvalidArgument(alloc::format!(
                    "grouped cross-validation needs at least {k} sequences, got {}",
                    ids.len()
                )));
            }
            let mut shuffled: Vec<&String> = ids.clone();
            shuffled.shuffle(rng);
            let mut sizes = alloc::vec![0usize; k];
            for id in shuffled {
                let members: Vec<usize> = sequences
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.as_ref() == Some(id))
                    .map(|(i, _)| i)
                    .collect();
                let target = (0..k).min_by_key(|&f| (sizes[f], f)).expect("k >= 2");
                sizes[target] += members.len();
                for i in members {
                    folds[i] = target;
                }
            }
        }
    }
    Ok(FoldAssignment {
        folds,
        fold_count: k,
    })
}

/// Gallery-class ranking for one probe: classes ordered by their closest
/// template, with the same tie-breaking as winner-takes-all. Classes
/// absent from the gallery rank last, in class order.
fn rank_classes_for_probe(
    matrix: &DistanceMatrix,
    probe: usize,
    gallery: &[usize],
    class_labels: &[String],
) -> Vec<usize> {
    let mut order: Vec<usize> = gallery.to_vec();
    order.sort_by(|&a, &b| matrix.value(probe, a).total_cmp(&matrix.value(probe, b)).then(a.cmp(&b)));
    let mut ranked: Vec<usize> = Vec::with_capacity(class_labels.len());
    for idx in order {
        let class = class_labels
            .iter()
            .position(|l| l == &matrix.labels()[idx])
            .expect("label present");
        if !ranked.contains(&class) {
            ranked.push(class);
        }
    }
    for c in 0..class_labels.len() {
        if !ranked.contains(&c) {
            ranked.push(c);
        }
    }
    ranked
}

/// Outcome of rank-based cross-validated classification.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub folds: FoldAssignment,
    /// Correct classification rate: fraction of probes whose own class
    /// ranks first. Identical to the first CMC entry.
    pub ccr: f64,
    /// Rank-k identification rates for k = 1..=C.
    pub cmc: Vec<f64>,
    /// Class labels in rank-index order.
    pub class_labels: Vec<String>,
}

/// Runs k-fold cross-validated winner-takes-all classification over a
/// distance matrix: each fold in turn is the probe set, the other folds
/// form the gallery, and every probe is scored by the rank of its own
/// class.
pub fn cross_validate<R: Rng>(
    matrix: &DistanceMatrix,
    mode: CvMode,
    k: usize,
    rng: &mut R,
) -> Result<CvOutcome> {
    let folds = assign_folds(matrix.sequences(), mode, k, rng)?;
    let mut class_labels: Vec<String> = matrix.labels().to_vec();
    class_labels.sort();
    class_labels.dedup();

    let n = matrix.len();
    let mut rank_hits = alloc::vec![0usize; class_labels.len()];
    for probe in 0..n {
        let gallery: Vec<usize> = (0..n)
            .filter(|&j| j != probe && folds.fold_of(j) != folds.fold_of(probe))
            .collect();
        let ranked = rank_classes_for_probe(matrix, probe, &gallery, &class_labels);
        let own = class_labels
            .iter()
            .position(|l| l == &matrix.labels()[probe])
            .expect("label present");
        let rank = ranked.iter().position(|&c| c == own).expect("complete ranking");
        rank_hits[rank] += 1;
    }
    let mut cmc = Vec::with_capacity(class_labels.len());
    let mut acc = 0usize;
    for hits in &rank_hits {
        acc += hits;
        cmc.push(acc as f64 / n as f64);
    }
    Ok(CvOutcome {
        folds,
        ccr: cmc[0],
        cmc,
        class_labels,
    })
}

/// Rank-k identification rates for the random baseline: every probe gets
/// a uniformly random class ranking.
pub fn random_classification(
    labels: &[String],
    classifier: &mut RandomClassifier,
) -> Result<(f64, Vec<f64>)> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("no templates to classify".into()));
    }
    let mut class_labels: Vec<String> = labels.to_vec();
    class_labels.sort();
    class_labels.dedup();
    let c = class_labels.len();
    let mut rank_hits = alloc::vec![0usize; c];
    for label in labels {
        let own = class_labels
            .iter()
            .position(|l| l == label)
            .expect("label present");
        let ranking = classifier.rank(c);
        let rank = ranking.iter().position(|&x| x == own).expect("permutation");
        rank_hits[rank] += 1;
    }
    let mut cmc = Vec::with_capacity(c);
    let mut acc = 0usize;
    for hits in &rank_hits {
        acc += hits;
        cmc.push(acc as f64 / labels.len() as f64);
    }
    Ok((cmc[0], cmc))
}

/// Cumulative match characteristic of a cross-validation run; rank-1 is
/// the correct classification rate.
pub fn cmc<R: Rng>(
    matrix: &DistanceMatrix,
    mode: CvMode,
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(cross_validate(matrix, mode, k, rng)?.cmc)
}
