use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::eval::distance_matrix::DistanceMatrix;
use crate::template::{GaitTemplate, TemplateData, TemplateDistance};

/// The four class-separability coefficients of a template distribution.
/// Zero-denominator cases are reported as infinity rather than failing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separability {
    pub dbi: f64,
    pub di: f64,
    pub sc: f64,
    pub fdr: f64,
}

fn centroid(templates: &[&GaitTemplate]) -> TemplateData {
    match &templates[0].data {
        TemplateData::Vector(first) => {
            let mut acc = first.clone();
            for t in &templates[1..] {
                acc += t.data.as_vector().expect("uniform template kind");
            }
            TemplateData::Vector(acc / templates.len() as f64)
        }
        TemplateData::Sequence(first) => {
            let mut acc = first.clone();
            for t in &templates[1..] {
                acc += t.data.as_sequence().expect("uniform template kind");
            }
            TemplateData::Sequence(acc / templates.len() as f64)
        }
    }
}

fn guard_ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator <= 0.0 {
        f64::INFINITY
    } else {
        numerator / denominator
    }
}

/// Computes DBI, DI, SC and FDR over the full evaluation part, using the
/// method's own distance function for every term. Centroids are
/// arithmetic template means; `sigma_c` is the average member-to-centroid
/// distance of a class.
pub fn separability(
    templates: &[GaitTemplate],
    metric: &TemplateDistance,
    pairwise: &DistanceMatrix,
) -> Result<Separability> {
    if templates.len() != pairwise.len() {
        return Err(Error::ShapeMismatch {
            expected: alloc::format!("{} templates", pairwise.len()),
            actual: alloc::format!("{}", templates.len()),
            context: "separability",
        });
    }
    // Classes in sorted label order.
    let mut labels: Vec<String> = pairwise.labels().to_vec();
    labels.sort();
    labels.dedup();
    let class_count = labels.len();
    if class_count < 2 {
        return Err(Error::InvalidArgument(
            "separability needs at least 2 classes".into(),
        ));
    }
    let members: Vec<Vec<usize>> = labels
        .iter()
        .map(|label| {
            pairwise
                .labels()
                .iter()
                .enumerate()
                .filter(|(_, l)| *l == label)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let centroids: Vec<TemplateData> = members
        .iter()
        .map(|idx| centroid(&idx.iter().map(|&i| &templates[i]).collect::<Vec<_>>()))
        .collect();
    let overall = centroid(&templates.iter().collect::<Vec<_>>());

    // sigma_c: average member distance to the class centroid.
    let mut sigma = Vec::with_capacity(class_count);
    for (c, idx) in members.iter().enumerate() {
        let mut acc = 0.0;
        for &i in idx {
            acc += metric.distance(&templates[i].data, &centroids[c])?;
        }
        sigma.push(acc / idx.len() as f64);
    }

    let mut centroid_dist = nalgebra::DMatrix::zeros(class_count, class_count);
    for c in 0..class_count {
        for c2 in (c + 1)..class_count {
            let d = metric.distance(&centroids[c], &centroids[c2])?;
            centroid_dist[(c, c2)] = d;
            centroid_dist[(c2, c)] = d;
        }
    }

    // Davies-Bouldin: mean over classes of the worst (sigma_c + sigma_c')
    // to centroid-distance ratio.
    let mut dbi_acc = 0.0;
    for c in 0..class_count {
        let mut worst = f64::NEG_INFINITY;
        for c2 in 0..class_count {
            if c2 == c {
                continue;
            }
            worst = worst.max(guard_ratio(sigma[c] + sigma[c2], centroid_dist[(c, c2)]));
        }
        dbi_acc += worst;
    }
    let dbi = dbi_acc / class_count as f64;

    // Dunn: smallest centroid distance over largest class spread.
    let mut min_between = f64::INFINITY;
    for c in 0..class_count {
        for c2 in (c + 1)..class_count {
            min_between = min_between.min(centroid_dist[(c, c2)]);
        }
    }
    let max_sigma = sigma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let di = guard_ratio(min_between, max_sigma);

    // Silhouette over the pairwise distances; a singleton class
    // contributes a zero term.
    let class_of: Vec<usize> = pairwise
        .labels()
        .iter()
        .map(|l| labels.iter().position(|x| x == l).expect("label present"))
        .collect();
    let mut sc_acc = 0.0;
    for (i, &own) in class_of.iter().enumerate() {
        let own_size = members[own].len();
        if own_size < 2 {
            continue;
        }
        let a = members[own]
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| pairwise.value(i, j))
            .sum::<f64>()
            / (own_size - 1) as f64;
        let mut b = f64::INFINITY;
        for (c, idx) in members.iter().enumerate() {
            if c == own {
                continue;
            }
            let avg = idx.iter().map(|&j| pairwise.value(i, j)).sum::<f64>() / idx.len() as f64;
            b = b.min(avg);
        }
        let denom = a.max(b);
        if denom > 0.0 {
            sc_acc += (b - a) / denom;
        }
    }
    let sc = sc_acc / templates.len() as f64;

    // Fisher's discriminant ratio: mean centroid-to-overall distance over
    // mean member-to-centroid distance.
    let mut between_acc = 0.0;
    for centroid in &centroids {
        between_acc += metric.distance(centroid, &overall)?;
    }
    let mut within_acc = 0.0;
    for (c, idx) in members.iter().enumerate() {
        for &i in idx {
            within_acc += metric.distance(&templates[i].data, &centroids[c])?;
        }
    }
    let fdr = guard_ratio(
        between_acc / class_count as f64,
        within_acc / templates.len() as f64,
    );

    Ok(Separability { dbi, di, sc, fdr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::NullClock;
    use crate::eval::distance_matrix::distance_matrix;
    use alloc::vec;
    use alloc::vec::Vec;
    use nalgebra::DVector;

    fn templates_1d(values: &[(f64, &str)]) -> Vec<GaitTemplate> {
        values
            .iter()
            .map(|(v, label)| GaitTemplate {
                data: TemplateData::Vector(DVector::from_column_slice(&[*v])),
                label: Some((*label).into()),
                sequence: None,
            })
            .collect()
    }

    /// Hand evaluation on the {0,2} / {10,12} fixture: sigma = 1 per
    /// class, centroid gap 10, overall mean 6: DBI 0.2, DI 10, FDR 5,
    /// SC = (9/11 + 7/9) / 2.
    #[test]
    fn two_cluster_fixture_hand_values() {
        let templates = templates_1d(&[(0.0, "a"), (2.0, "a"), (10.0, "b"), (12.0, "b")]);
        let metric = TemplateDistance::Euclidean;
        let m = distance_matrix(&templates, &metric, &NullClock).unwrap();
        let s = separability(&templates, &metric, &m).unwrap();
        assert!((s.dbi - 0.2).abs() < 1e-12, "dbi {}", s.dbi);
        assert!((s.di - 10.0).abs() < 1e-12, "di {}", s.di);
        assert!((s.fdr - 5.0).abs() < 1e-12, "fdr {}", s.fdr);
        let expected_sc = (9.0 / 11.0 + 7.0 / 9.0) / 2.0;
        assert!((s.sc - expected_sc).abs() < 1e-9, "sc {}", s.sc);
        assert!((s.sc - 0.798).abs() < 1e-3);
    }

    #[test]
    fn identical_centroids_give_infinite_dbi() {
        let templates = templates_1d(&[(-1.0, "a"), (1.0, "a"), (-1.0, "b"), (1.0, "b")]);
        let metric = TemplateDistance::Euclidean;
        let m = distance_matrix(&templates, &metric, &NullClock).unwrap();
        let s = separability(&templates, &metric, &m).unwrap();
        assert!(s.dbi.is_infinite());
    }

    #[test]
    fn singleton_classes_give_infinite_di_and_fdr() {
        let templates = templates_1d(&[(0.0, "a"), (5.0, "b")]);
        let metric = TemplateDistance::Euclidean;
        let m = distance_matrix(&templates, &metric, &NullClock).unwrap();
        let s = separability(&templates, &metric, &m).unwrap();
        assert!(s.di.is_infinite());
        assert!(s.fdr.is_infinite());
        // Singleton silhouette terms are zero by convention.
        assert_eq!(s.sc, 0.0);
    }

    #[test]
    fn works_on_sequence_templates() {
        use nalgebra::DMatrix;
        let mk = |base: f64, label: &str| GaitTemplate {
            data: TemplateData::Sequence(DMatrix::from_fn(4, 2, |t, c| {
                base + t as f64 * 0.1 + c as f64
            })),
            label: Some(label.into()),
            sequence: None,
        };
        let templates = vec![mk(0.0, "a"), mk(0.05, "a"), mk(5.0, "b"), mk(5.05, "b")];
        let metric = TemplateDistance::Dtw(crate::dtw::WarpSpec::l1());
        let m = distance_matrix(&templates, &metric, &NullClock).unwrap();
        let s = separability(&templates, &metric, &m).unwrap();
        assert!(s.sc > 0.9);
        assert!(s.di > 1.0);
        assert!(s.dbi < 0.5);
    }
}
