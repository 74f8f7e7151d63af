use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::eval::distance_matrix::DistanceMatrix;

/// Genuine/impostor cumulative counts at each distinct pair distance.
struct PairSweep {
    thresholds: Vec<f64>,
    genuine_le: Vec<u64>,
    impostor_le: Vec<u64>,
    genuine_total: u64,
    impostor_total: u64,
}

/// Collects the upper-triangle pair distances: same-class pairs are
/// genuine, cross-class pairs impostor.
fn pair_sweep(matrix: &DistanceMatrix) -> Result<PairSweep> {
    let n = matrix.len();
    let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let genuine = matrix.labels()[i] == matrix.labels()[j];
            pairs.push((matrix.value(i, j), genuine));
        }
    }
    let genuine_total = pairs.iter().filter(|(_, g)| *g).count() as u64;
    let impostor_total = pairs.len() as u64 - genuine_total;
    if genuine_total == 0 || impostor_total == 0 {
        return Err(Error::InvalidArgument(
            "threshold metrics need at least one genuine and one impostor pair".into(),
        ));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut thresholds = Vec::new();
    let mut genuine_le = Vec::new();
    let mut impostor_le = Vec::new();
    let mut gen_acc = 0u64;
    let mut imp_acc = 0u64;
    let mut k = 0;
    while k < pairs.len() {
        let t = pairs[k].0;
        while k < pairs.len() && pairs[k].0 == t {
            if pairs[k].1 {
                gen_acc += 1;
            } else {
                imp_acc += 1;
            }
            k += 1;
        }
        thresholds.push(t);
        genuine_le.push(gen_acc);
        impostor_le.push(imp_acc);
    }
    Ok(PairSweep {
        thresholds,
        genuine_le,
        impostor_le,
        genuine_total,
        impostor_total,
    })
}

/// False accept and false reject rates over all distinct pair distances,
/// and the equal error rate located by linear interpolation between
/// adjacent threshold samples. Returns (thresholds, FAR, FRR, EER).
#[allow(clippy::type_complexity)]
pub fn far_frr_eer(matrix: &DistanceMatrix) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let sweep = pair_sweep(matrix)?;
    let far: Vec<f64> = sweep
        .impostor_le
        .iter()
        .map(|&c| c as f64 / sweep.impostor_total as f64)
        .collect();
    let frr: Vec<f64> = sweep
        .genuine_le
        .iter()
        .map(|&c| (sweep.genuine_total - c) as f64 / sweep.genuine_total as f64)
        .collect();
    let eer = locate_eer(&far, &frr);
    Ok((sweep.thresholds, far, frr, eer))
}

/// Crossing of the FAR and FRR curves. Below the smallest threshold the
/// rates are (0, 1); above the largest they are (1, 0), so a crossing
/// always exists.
fn locate_eer(far: &[f64], frr: &[f64]) -> f64 {
    let mut prev = (0.0f64, 1.0f64);
    for (&fa, &fr) in far.iter().zip(frr.iter()) {
        if fa == fr {
            return fa;
        }
        if fa > fr {
            let denom = (fa - prev.0) - (fr - prev.1);
            let s = if denom == 0.0 {
                0.0
            } else {
                (prev.1 - prev.0) / denom
            };
            return prev.0 + s * (fa - prev.0);
        }
        prev = (fa, fr);
    }
    // FAR ends at 1 and FRR at 0, so this is unreachable for valid input.
    *far.last().unwrap_or(&0.5)
}

/// ROC curve (FAR, TAR) extended to (0,0), plus the area under it.
///
/// The area is accumulated over integer pair counts and divided once, so
/// it equals the pairwise comparison probability
/// `P(genuine < impostor) + P(genuine = impostor) / 2` exactly.
pub fn roc_auc(matrix: &DistanceMatrix) -> Result<(Vec<(f64, f64)>, f64)> {
    let sweep = pair_sweep(matrix)?;
    let mut curve = Vec::with_capacity(sweep.thresholds.len() + 1);
    curve.push((0.0, 0.0));
    for k in 0..sweep.thresholds.len() {
        curve.push((
            sweep.impostor_le[k] as f64 / sweep.impostor_total as f64,
            sweep.genuine_le[k] as f64 / sweep.genuine_total as f64,
        ));
    }
    let mut numerator: u128 = 0;
    let mut prev = (0u64, 0u64);
    for k in 0..sweep.thresholds.len() {
        let cur = (sweep.impostor_le[k], sweep.genuine_le[k]);
        numerator += (cur.0 - prev.0) as u128 * (cur.1 + prev.1) as u128;
        prev = cur;
    }
    let auc = numerator as f64 / (2.0 * sweep.impostor_total as f64 * sweep.genuine_total as f64);
    Ok((curve, auc))
}

/// Recall/precision curve over the swept thresholds with precision 1 at
/// recall 0, plus the mean average precision as the trapezoidal area
/// under it.
pub fn rcl_pcn_map(matrix: &DistanceMatrix) -> Result<(Vec<(f64, f64)>, f64)> {
    let sweep = pair_sweep(matrix)?;
    let mut curve = Vec::with_capacity(sweep.thresholds.len() + 1);
    curve.push((0.0, 1.0));
    for k in 0..sweep.thresholds.len() {
        let tp = sweep.genuine_le[k];
        let fp = sweep.impostor_le[k];
        let rcl = tp as f64 / sweep.genuine_total as f64;
        let pcn = tp as f64 / (tp + fp) as f64;
        curve.push((rcl, pcn));
    }
    let mut area = 0.0;
    for w in curve.windows(2) {
        area += 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1);
    }
    Ok((curve, area))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::distance_matrix::from_values;
    use alloc::string::{String, ToString};
    use alloc::vec;
    use alloc::vec::Vec;
    use nalgebra::DMatrix;

    fn explicit(values: &[f64], labels: &[&str]) -> DistanceMatrix {
        let n = labels.len();
        let m = DMatrix::from_row_slice(n, n, values);
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        from_values(m, labels, vec![]).unwrap()
    }

    /// Two templates per class, cleanly separated: genuine distances all
    /// below impostor distances.
    fn separable() -> DistanceMatrix {
        explicit(
            &[
                0.0, 1.0, 8.0, 9.0, //
                1.0, 0.0, 7.0, 8.5, //
                8.0, 7.0, 0.0, 2.0, //
                9.0, 8.5, 2.0, 0.0,
            ],
            &["a", "a", "b", "b"],
        )
    }

    #[test]
    fn separable_gives_zero_eer_unit_auc_unit_map() {
        let m = separable();
        let (_, _, _, eer) = far_frr_eer(&m).unwrap();
        assert_eq!(eer, 0.0);
        let (_, auc) = roc_auc(&m).unwrap();
        assert_eq!(auc, 1.0);
        let (_, map) = rcl_pcn_map(&m).unwrap();
        assert_eq!(map, 1.0);
    }

    /// Genuine {1,2,3} and impostor {2,3,4}: the sweep crosses exactly at
    /// threshold 2 where FAR = FRR = 1/3.
    #[test]
    fn eer_fixture_one_third() {
        // Three "a" templates in a chain give genuine distances 1, 2, 3;
        // one "b" template gives impostor distances 2, 3, 4.
        let m = explicit(
            &[
                0.0, 1.0, 3.0, 2.0, //
                1.0, 0.0, 2.0, 3.0, //
                3.0, 2.0, 0.0, 4.0, //
                2.0, 3.0, 4.0, 0.0,
            ],
            &["a", "a", "a", "b"],
        );
        let (thresholds, far, frr, eer) = far_frr_eer(&m).unwrap();
        assert_eq!(thresholds, vec![1.0, 2.0, 3.0, 4.0]);
        assert!((eer - 1.0 / 3.0).abs() < 1e-15);
        // FAR non-decreasing, FRR non-increasing.
        for w in far.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in frr.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    /// Identical genuine and impostor distributions: EER and AUC are 1/2.
    #[test]
    fn identical_distributions_are_chance() {
        let m = explicit(
            &[
                0.0, 1.0, 1.0, 2.0, //
                1.0, 0.0, 2.0, 1.0, //
                1.0, 2.0, 0.0, 2.0, //
                2.0, 1.0, 2.0, 0.0,
            ],
            &["a", "a", "b", "b"],
        );
        // Genuine pairs {1, 2}; impostor pairs {1, 2, 2, 1}: the same
        // half-and-half distribution.
        let (_, auc) = roc_auc(&m).unwrap();
        assert!((auc - 0.5).abs() < 1e-9);
        let (_, _, _, eer) = far_frr_eer(&m).unwrap();
        assert_eq!(eer, 0.5);
    }

    /// MAP fixture: genuine {1,2}, impostor {1.5}, worked by hand.
    #[test]
    fn map_fixture() {
        let m = explicit(
            &[
                0.0, 1.0, 2.0, 1.5, //
                1.0, 0.0, 9.0, 9.0, //
                2.0, 9.0, 0.0, 9.0, //
                1.5, 9.0, 9.0, 0.0,
            ],
            &["a", "a", "a", "b"],
        );
        // Genuine pairs: (0,1)=1, (0,2)=2, (1,2)=9. Impostor: (0,3)=1.5,
        // (1,3)=9, (2,3)=9. Restricting attention to the low thresholds:
        // t=1:   TP=1 FP=0 -> (1/3, 1)
        // t=1.5: TP=1 FP=1 -> (1/3, 1/2)
        // t=2:   TP=2 FP=1 -> (2/3, 2/3)
        // t=9:   TP=3 FP=3 -> (1, 1/2)
        let (curve, map) = rcl_pcn_map(&m).unwrap();
        assert_eq!(curve[0], (0.0, 1.0));
        let expected = 0.5 * (1.0 / 3.0) * (1.0 + 1.0)
            + 0.0
            + 0.5 * (1.0 / 3.0) * (0.5 + 2.0 / 3.0)
            + 0.5 * (1.0 / 3.0) * (2.0 / 3.0 + 0.5);
        assert!((map - expected).abs() < 1e-15, "map {map} vs {expected}");
    }

    #[test]
    fn needs_both_pair_kinds() {
        let m = explicit(&[0.0, 1.0, 1.0, 0.0], &["a", "a"]);
        assert!(far_frr_eer(&m).is_err());
        let m = explicit(&[0.0, 1.0, 1.0, 0.0], &["a", "b"]);
        assert!(roc_auc(&m).is_err());
    }

    /// Exhaustive threshold-sweep oracle: recompute FAR/FRR/EER, AUC and
    /// MAP by independent per-threshold counting loops and compare
    /// exactly.
    #[test]
    fn sweep_oracle_agrees_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..25 {
            let n = rng.gen_range(4usize..9);
            let mut values = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    // Coarse grid so ties occur.
                    let d = rng.gen_range(1..6) as f64;
                    values[(i, j)] = d;
                    values[(j, i)] = d;
                }
            }
            let labels: Vec<String> =
                (0..n).map(|i| alloc::format!("c{}", i % 3)).collect();
            let m = from_values(values.clone(), labels.clone(), vec![]).unwrap();
            if far_frr_eer(&m).is_err() {
                continue;
            }

            // Oracle pair population.
            let mut genuine = Vec::new();
            let mut impostor = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if labels[i] == labels[j] {
                        genuine.push(values[(i, j)]);
                    } else {
                        impostor.push(values[(i, j)]);
                    }
                }
            }
            let mut thresholds: Vec<f64> = genuine
                .iter()
                .chain(impostor.iter())
                .cloned()
                .collect();
            thresholds.sort_by(f64::total_cmp);
            thresholds.dedup();

            let g = genuine.len() as f64;
            let imp = impostor.len() as f64;
            let far_o: Vec<f64> = thresholds
                .iter()
                .map(|&t| impostor.iter().filter(|&&d| d <= t).count() as f64 / imp)
                .collect();
            let frr_o: Vec<f64> = thresholds
                .iter()
                .map(|&t| genuine.iter().filter(|&&d| d > t).count() as f64 / g)
                .collect();

            let (thr, far, frr, eer) = far_frr_eer(&m).unwrap();
            assert_eq!(thr, thresholds);
            assert_eq!(far, far_o);
            assert_eq!(frr, frr_o);
            // Oracle EER by the same interpolation rule over its own curves.
            let eer_o = super::locate_eer(&far_o, &frr_o);
            assert_eq!(eer, eer_o);

            // Oracle AUC as the pairwise comparison probability.
            let mut wins = 0u64;
            let mut ties = 0u64;
            for &gd in &genuine {
                for &id in &impostor {
                    if gd < id {
                        wins += 1;
                    } else if gd == id {
                        ties += 1;
                    }
                }
            }
            let auc_o = (2 * wins + ties) as f64 / (2.0 * g * imp);
            let (_, auc) = roc_auc(&m).unwrap();
            assert_eq!(auc, auc_o);

            // Oracle MAP by per-threshold counting and the same trapezoid.
            let mut points = vec![(0.0f64, 1.0f64)];
            for &t in &thresholds {
                let tp = genuine.iter().filter(|&&d| d <= t).count() as f64;
                let fp = impostor.iter().filter(|&&d| d <= t).count() as f64;
                points.push((tp / g, tp / (tp + fp)));
            }
            let mut map_o = 0.0;
            for w in points.windows(2) {
                map_o += 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1);
            }
            let (_, map) = rcl_pcn_map(&m).unwrap();
            assert_eq!(map, map_o);
        }
    }
}
