use alloc::format;
use alloc::vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Per-frame local cost between two channel rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalCost {
    L1,
    L2,
}

impl LocalCost {
    #[inline]
    fn eval(&self, a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
        match self {
            LocalCost::L1 => {
                let mut acc = 0.0;
                for c in 0..a.ncols() {
                    acc += (a[(i, c)] - b[(j, c)]).abs();
                }
                acc
            }
            LocalCost::L2 => {
                let mut acc = 0.0;
                for c in 0..a.ncols() {
                    let d = a[(i, c)] - b[(j, c)];
                    acc += d * d;
                }
                libm::sqrt(acc)
            }
        }
    }
}

/// Alignment specification: local cost plus the classic unweighted step
/// set {(1,0),(0,1),(1,1)} with full (1,1)..(T1,T2) boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WarpSpec {
    pub local_cost: LocalCost,
}

impl WarpSpec {
    pub fn l1() -> Self {
        WarpSpec {
            local_cost: LocalCost::L1,
        }
    }

    pub fn l2() -> Self {
        WarpSpec {
            local_cost: LocalCost::L2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.local_cost {
            LocalCost::L1 => "DTW+L1",
            LocalCost::L2 => "DTW+L2",
        }
    }
}

/// Minimal accumulated local cost over all monotone warping paths.
/// No path-length normalization is applied.
///
/// Sequences are frames-by-channels matrices and must agree on the channel
/// count. Runs the O(T1*T2) dynamic program with two rows; the full cost
/// matrix is never materialized.
pub fn dtw_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, spec: WarpSpec) -> Result<f64> {
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::InvalidArgument("DTW requires non-empty sequences".into()));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} channels", a.ncols()),
            actual: format!("{} channels", b.ncols()),
            context: "dtw_distance",
        });
    }
    let (ta, tb) = (a.nrows(), b.nrows());
    let mut prev = vec![f64::INFINITY; tb + 1];
    let mut curr = vec![f64::INFINITY; tb + 1];
    prev[0] = 0.0;
    for i in 1..=ta {
        curr[0] = f64::INFINITY;
        for j in 1..=tb {
            let cost = spec.local_cost.eval(a, i - 1, b, j - 1);
            let best = prev[j].min(curr[j - 1]).min(prev[j - 1]);
            curr[j] = cost + best;
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[tb])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn seq(values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(values.len(), 1, values)
    }

    /// Exhaustive enumeration of every monotone warping path. Exponential;
    /// only usable for tiny sequences.
    pub(crate) fn brute_force_dtw(a: &DMatrix<f64>, b: &DMatrix<f64>, spec: WarpSpec) -> f64 {
        fn go(
            a: &DMatrix<f64>,
            b: &DMatrix<f64>,
            spec: WarpSpec,
            i: usize,
            j: usize,
        ) -> f64 {
            let cost = spec.local_cost.eval(a, i, b, j);
            if i == a.nrows() - 1 && j == b.nrows() - 1 {
                return cost;
            }
            let mut best = f64::INFINITY;
            if i + 1 < a.nrows() {
                best = best.min(go(a, b, spec, i + 1, j));
            }
            if j + 1 < b.nrows() {
                best = best.min(go(a, b, spec, i, j + 1));
            }
            if i + 1 < a.nrows() && j + 1 < b.nrows() {
                best = best.min(go(a, b, spec, i + 1, j + 1));
            }
            cost + best
        }
        go(a, b, spec, 0, 0)
    }

    #[test]
    fn identical_sequences_have_zero_distance() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(dtw_distance(&a, &a, WarpSpec::l1()).unwrap(), 0.0);
        assert_eq!(dtw_distance(&a, &a, WarpSpec::l2()).unwrap(), 0.0);
    }

    #[test]
    fn single_frame_is_local_cost() {
        let a = seq(&[0.0]);
        let b = seq(&[5.0]);
        assert_eq!(dtw_distance(&a, &b, WarpSpec::l1()).unwrap(), 5.0);
    }

    #[test]
    fn warped_repetition_aligns_for_free() {
        let a = seq(&[1.0, 2.0, 3.0]);
        let b = seq(&[1.0, 2.0, 2.0, 3.0]);
        let d = dtw_distance(&a, &b, WarpSpec::l1()).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(d, brute_force_dtw(&a, &b, WarpSpec::l1()));
    }

    #[test]
    fn rejects_shape_problems() {
        let a = DMatrix::<f64>::zeros(2, 2);
        let b = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            dtw_distance(&a, &b, WarpSpec::l1()),
            Err(Error::ShapeMismatch { .. })
        ));
        let empty = DMatrix::<f64>::zeros(0, 2);
        assert!(dtw_distance(&empty, &a, WarpSpec::l1()).is_err());
    }

    #[test]
    fn constant_sequence_vs_longer_constant_is_zero() {
        let a = DMatrix::from_element(2, 3, 0.7);
        let b = DMatrix::from_element(9, 3, 0.7);
        assert_eq!(dtw_distance(&a, &b, WarpSpec::l1()).unwrap(), 0.0);
        assert_eq!(dtw_distance(&a, &b, WarpSpec::l2()).unwrap(), 0.0);
    }

    proptest::proptest! {
        /// DP result equals exhaustive path enumeration for short integer
        /// sequences. Integer L1 costs make both accumulation orders
        /// exact, so the agreement is bitwise.
        #[test]
        fn matches_brute_force_exactly_on_integers(
            a in proptest::collection::vec(-8i32..8, 1..=6),
            b in proptest::collection::vec(-8i32..8, 1..=6),
        ) {
            let av: Vec<f64> = a.iter().map(|&x| x as f64).collect();
            let bv: Vec<f64> = b.iter().map(|&x| x as f64).collect();
            let (a, b) = (seq(&av), seq(&bv));
            let fast = dtw_distance(&a, &b, WarpSpec::l1()).unwrap();
            let slow = brute_force_dtw(&a, &b, WarpSpec::l1());
            proptest::prop_assert_eq!(fast, slow);
        }

        /// With L2 local costs the two accumulation orders can differ by
        /// rounding, so the agreement is to within a few ulps.
        #[test]
        fn matches_brute_force_l2(
            a in proptest::collection::vec(-8.0f64..8.0, 1..=6),
            b in proptest::collection::vec(-8.0f64..8.0, 1..=6),
        ) {
            let (a, b) = (seq(&a), seq(&b));
            let fast = dtw_distance(&a, &b, WarpSpec::l2()).unwrap();
            let slow = brute_force_dtw(&a, &b, WarpSpec::l2());
            proptest::prop_assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0));
        }

        /// Symmetry is exact.
        #[test]
        fn symmetric(
            a in proptest::collection::vec(-100.0f64..100.0, 1..12),
            b in proptest::collection::vec(-100.0f64..100.0, 1..12),
        ) {
            let (a, b) = (seq(&a), seq(&b));
            let ab = dtw_distance(&a, &b, WarpSpec::l1()).unwrap();
            let ba = dtw_distance(&b, &a, WarpSpec::l1()).unwrap();
            proptest::prop_assert_eq!(ab, ba);
        }

        /// Appending an identical suffix never increases the distance.
        #[test]
        fn identical_suffix_is_free(
            a in proptest::collection::vec(-10.0f64..10.0, 1..8),
            b in proptest::collection::vec(-10.0f64..10.0, 1..8),
            x in proptest::collection::vec(-10.0f64..10.0, 1..8),
        ) {
            let plain = dtw_distance(&seq(&a), &seq(&b), WarpSpec::l1()).unwrap();
            let mut ax = a.clone();
            ax.extend_from_slice(&x);
            let mut bx = b.clone();
            bx.extend_from_slice(&x);
            let suffixed = dtw_distance(&seq(&ax), &seq(&bx), WarpSpec::l1()).unwrap();
            proptest::prop_assert!(suffixed <= plain + 1e-12);
        }
    }
}
