use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::sample::LabeledDataset;

/// Between-, within- and total scatter of a labeled dataset, with the
/// overall and per-class means.
///
/// The within and total sums weight each class by `1/N_c`, the between sum
/// is unweighted over classes, and `total = between + within` holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterTriple {
    pub between: DMatrix<f64>,
    pub within: DMatrix<f64>,
    pub total: DMatrix<f64>,
    pub mean: DVector<f64>,
    /// Class means as columns, one per class in dataset class order.
    pub class_means: DMatrix<f64>,
}

/// Dense D-by-D scatter matrices of a dataset. Intended for moderate
/// dimensionality; the transform-learning routines use factored forms and
/// never materialize these.
pub fn scatter_matrices(dataset: &LabeledDataset) -> Result<ScatterTriple> {
    let d = dataset.dimension();
    let n = dataset.len();
    let c = dataset.class_count();
    let data = dataset.data_matrix();

    let mut mean = DVector::zeros(d);
    for col in 0..n {
        mean += data.column(col);
    }
    mean /= n as f64;

    let mut class_means = DMatrix::zeros(d, c);
    for (ci, class) in dataset.classes().iter().enumerate() {
        let mut m = DVector::zeros(d);
        for &s in class.indices() {
            m += data.column(s);
        }
        m /= class.len() as f64;
        class_means.set_column(ci, &m);
    }

    // Between: columns (mu_c - mu).
    let mut upsilon = class_means.clone();
    for ci in 0..c {
        upsilon.column_mut(ci).axpy(-1.0, &mean, 1.0);
    }
    let between = &upsilon * upsilon.transpose();

    // Within and total via weighted centered factors.
    let mut centered_class = DMatrix::zeros(d, n);
    let mut centered_mean = DMatrix::zeros(d, n);
    for (ci, class) in dataset.classes().iter().enumerate() {
        let w = 1.0 / libm::sqrt(class.len() as f64);
        for &s in class.indices() {
            let col = data.column(s);
            centered_class.set_column(s, &((col - class_means.column(ci)) * w));
            centered_mean.set_column(s, &((col - &mean) * w));
        }
    }
    let within = &centered_class * centered_class.transpose();
    let total = &centered_mean * centered_mean.transpose();

    Ok(ScatterTriple {
        between,
        within,
        total,
        mean,
        class_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{GaitSample, LabeledDataset, Modality};
    use alloc::format;
    use alloc::vec::Vec;

    pub(crate) fn dataset_1d(values: &[(&str, f64)]) -> LabeledDataset {
        let samples: Vec<GaitSample> = values
            .iter()
            .enumerate()
            .map(|(i, (label, v))| {
                GaitSample::new(
                    DMatrix::from_element(1, 1, *v),
                    Modality::BoneRotations,
                    *label,
                    format!("{label}_{i}"),
                    0,
                    1,
                    120.0,
                )
                .unwrap()
            })
            .collect();
        LabeledDataset::new(samples, None).unwrap()
    }

    #[test]
    fn singleton_classes_have_zero_within() {
        let ds = dataset_1d(&[("a", 1.0), ("b", 5.0)]);
        let s = scatter_matrices(&ds).unwrap();
        assert_eq!(s.within[(0, 0)], 0.0);
        assert!(s.between[(0, 0)] > 0.0);
    }

    #[test]
    fn one_class_has_zero_between() {
        let ds = dataset_1d(&[("a", 1.0), ("a", 3.0), ("a", 5.0)]);
        let s = scatter_matrices(&ds).unwrap();
        assert!(s.between[(0, 0)].abs() < 1e-12);
    }

    /// Hand evaluation: classes {0,2} and {10,12} give mu = 6,
    /// between = 50, within = 2, total = 52.
    #[test]
    fn two_cluster_fixture() {
        let ds = dataset_1d(&[("a", 0.0), ("a", 2.0), ("b", 10.0), ("b", 12.0)]);
        let s = scatter_matrices(&ds).unwrap();
        assert!((s.mean[0] - 6.0).abs() < 1e-12);
        assert!((s.between[(0, 0)] - 50.0).abs() < 1e-12);
        assert!((s.within[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((s.total[(0, 0)] - 52.0).abs() < 1e-12);
    }

    proptest::proptest! {
        /// total = between + within, relatively, on random datasets.
        #[test]
        fn scatter_identity(seed in 0u64..300) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let dims = rng.gen_range(1usize..8);
            let classes = rng.gen_range(1usize..5);
            let samples: Vec<GaitSample> = (0..classes)
                .flat_map(|c| {
                    let count = rng.gen_range(1usize..6);
                    (0..count)
                        .map(|k| {
                            GaitSample::new(
                                DMatrix::from_fn(1, dims, |_, _| rng.gen_range(-5.0..5.0)),
                                Modality::BoneRotations,
                                format!("c{c}"),
                                format!("c{c}_{k}"),
                                0,
                                1,
                                120.0,
                            )
                            .unwrap()
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            let ds = LabeledDataset::new(samples, None).unwrap();
            let s = scatter_matrices(&ds).unwrap();
            let sum = &s.between + &s.within;
            let err = (&s.total - &sum).norm();
            proptest::prop_assert!(err <= 1e-8 * s.total.norm().max(1e-30));
        }
    }
}
