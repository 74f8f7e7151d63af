use alloc::format;
use alloc::string::String;

use nalgebra::{DMatrix, DVector};

use crate::dtw::{dtw_distance, WarpSpec};
use crate::error::{Error, Result};

/// Feature content of a template: a fixed-length vector, or a whole frame
/// sequence for methods compared by DTW.
#[derive(Debug, Clone, PartialEq)]
pub enum TemplateData {
    Vector(DVector<f64>),
    Sequence(DMatrix<f64>),
}

impl TemplateData {
    /// Total number of scalars in the template.
    pub fn dim(&self) -> usize {
        match self {
            TemplateData::Vector(v) => v.len(),
            TemplateData::Sequence(m) => m.nrows() * m.ncols(),
        }
    }

    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            TemplateData::Vector(v) => Some(v),
            TemplateData::Sequence(_) => None,
        }
    }

    pub fn as_sequence(&self) -> Option<&DMatrix<f64>> {
        match self {
            TemplateData::Sequence(m) => Some(m),
            TemplateData::Vector(_) => None,
        }
    }
}

/// One gait template with its identity label (when known) and the id of
/// the motion sequence its cycle came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTemplate {
    pub data: TemplateData,
    pub label: Option<String>,
    pub sequence: Option<String>,
}

/// Mahalanobis metric with a validated symmetric positive definite
/// inverse covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MahalanobisMetric {
    inverse: DMatrix<f64>,
}

impl MahalanobisMetric {
    pub fn new(inverse: DMatrix<f64>) -> Result<Self> {
        if inverse.nrows() != inverse.ncols() {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                actual: format!("{}x{}", inverse.nrows(), inverse.ncols()),
                context: "mahalanobis metric",
            });
        }
        let scale = inverse.amax().max(1e-300);
        let asym = (&inverse - inverse.transpose()).amax();
        if asym > 1e-9 * scale {
            return Err(Error::NotPositiveDefinite);
        }
        let sym = (&inverse + inverse.transpose()) * 0.5;
        if sym.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(MahalanobisMetric { inverse: sym })
    }

    pub fn identity(dim: usize) -> Self {
        MahalanobisMetric {
            inverse: DMatrix::identity(dim, dim),
        }
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.inverse.nrows()
    }

    pub fn distance(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
        if a.len() != self.dim() || b.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}-dimensional templates", self.dim()),
                actual: format!("{} and {}", a.len(), b.len()),
                context: "mahalanobis distance",
            });
        }
        let diff = a - b;
        let q = (&self.inverse * &diff).dot(&diff);
        Ok(libm::sqrt(q.max(0.0)))
    }
}

/// Mahalanobis distance between two templates under a validated metric.
pub fn mahalanobis(a: &DVector<f64>, b: &DVector<f64>, metric: &MahalanobisMetric) -> Result<f64> {
    metric.distance(a, b)
}

/// Distance function paired with a feature map. Vector templates compare
/// with L1, Euclidean or Mahalanobis; sequence templates compare with DTW.
#[derive(Debug, Clone, PartialEq)]
pub enum TemplateDistance {
    L1,
    Euclidean,
    Mahalanobis(MahalanobisMetric),
    Dtw(WarpSpec),
}

impl TemplateDistance {
    pub fn name(&self) -> &'static str {
        match self {
            TemplateDistance::L1 => "L1",
            TemplateDistance::Euclidean => "Euclidean",
            TemplateDistance::Mahalanobis(_) => "Mahalanobis",
            TemplateDistance::Dtw(spec) => spec.name(),
        }
    }

    pub fn distance(&self, a: &TemplateData, b: &TemplateData) -> Result<f64> {
        match (self, a, b) {
            (TemplateDistance::L1, TemplateData::Vector(a), TemplateData::Vector(b)) => {
                if a.len() != b.len() {
                    return Err(vector_shape_error(a.len(), b.len(), "L1 distance"));
                }
                Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum())
            }
            (TemplateDistance::Euclidean, TemplateData::Vector(a), TemplateData::Vector(b)) => {
                if a.len() != b.len() {
                    return Err(vector_shape_error(a.len(), b.len(), "Euclidean distance"));
                }
                let mut acc = 0.0;
                for (x, y) in a.iter().zip(b.iter()) {
                    let d = x - y;
                    acc += d * d;
                }
                Ok(libm::sqrt(acc))
            }
            (
                TemplateDistance::Mahalanobis(metric),
                TemplateData::Vector(a),
                TemplateData::Vector(b),
            ) => metric.distance(a, b),
            (TemplateDistance::Dtw(spec), TemplateData::Sequence(a), TemplateData::Sequence(b)) => {
                dtw_distance(a, b, *spec)
            }
            _ => Err(Error::ShapeMismatch {
                expected: match self {
                    TemplateDistance::Dtw(_) => "sequence templates".into(),
                    _ => "vector templates".into(),
                },
                actual: format!("{} and {}", kind_name(a), kind_name(b)),
                context: "template distance",
            }),
        }
    }
}

fn kind_name(t: &TemplateData) -> &'static str {
    match t {
        TemplateData::Vector(_) => "vector",
        TemplateData::Sequence(_) => "sequence",
    }
}

fn vector_shape_error(a: usize, b: usize, context: &'static str) -> Error {
    Error::ShapeMismatch {
        expected: format!("matching dimensions ({a})"),
        actual: format!("{b}"),
        context,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtw::LocalCost;
    use alloc::vec;

    #[test]
    fn identity_metric_is_euclidean() {
        let m = MahalanobisMetric::identity(3);
        let a = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let b = DVector::from_vec(vec![4.0, 6.0, 3.0]);
        let d = m.distance(&a, &b).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
        assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
    }

    /// Hand evaluation: diag(4,1) on a difference of (1,2) gives
    /// sqrt(4 + 4).
    #[test]
    fn diagonal_metric_hand_value() {
        let m = MahalanobisMetric::new(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]))
            .unwrap();
        let a = DVector::from_vec(vec![1.0, 2.0]);
        let b = DVector::from_vec(vec![0.0, 0.0]);
        let d = mahalanobis(&a, &b, &m).unwrap();
        assert!((d - 2.828427).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_positive_definite() {
        let err = MahalanobisMetric::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]))
            .unwrap_err();
        assert_eq!(err, Error::NotPositiveDefinite);
        let err = MahalanobisMetric::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.9, -0.9, 1.0]))
            .unwrap_err();
        assert_eq!(err, Error::NotPositiveDefinite);
    }

    #[test]
    fn distance_dispatch_checks_shapes() {
        let v = TemplateData::Vector(DVector::from_vec(vec![1.0, 2.0]));
        let s = TemplateData::Sequence(DMatrix::from_row_slice(2, 1, &[1.0, 2.0]));
        assert!(TemplateDistance::L1.distance(&v, &s).is_err());
        assert!(TemplateDistance::Dtw(WarpSpec {
            local_cost: LocalCost::L2
        })
        .distance(&v, &v)
        .is_err());
        let d = TemplateDistance::L1.distance(&v, &v).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn l1_and_euclidean_values() {
        let a = TemplateData::Vector(DVector::from_vec(vec![0.0, 0.0]));
        let b = TemplateData::Vector(DVector::from_vec(vec![3.0, 4.0]));
        assert_eq!(TemplateDistance::L1.distance(&a, &b).unwrap(), 7.0);
        assert_eq!(TemplateDistance::Euclidean.distance(&a, &b).unwrap(), 5.0);
    }
}
