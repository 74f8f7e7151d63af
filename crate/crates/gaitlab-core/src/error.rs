use alloc::string::String;
use core::fmt;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument was violated.
    InvalidArgument(String),
    /// Matrix or sequence dimensions do not line up.
    ShapeMismatch {
        expected: String,
        actual: String,
        context: &'static str,
    },
    /// A bone name was referenced that the skeleton does not declare.
    UnknownBone(String),
    /// A frame supplied the wrong number of degree-of-freedom values for a bone.
    DofMismatch {
        bone: String,
        expected: usize,
        actual: usize,
    },
    /// Skeletons passed to averaging do not share bone names, hierarchy or axes.
    IncompatibleSkeletons(String),
    /// A logical joint name is missing from the joint map or the dataset.
    MissingJoint(String),
    /// An angle was requested between vectors where one has (near-)zero length.
    ZeroLengthSegment { frame: usize, segment: &'static str },
    /// MMC learning selected no directions: no eigenvalue reached 1/2.
    EmptyTransform { largest_delta: f64 },
    /// A matrix that must be inverted is singular or too ill-conditioned.
    Singular { condition: f64, advice: &'static str },
    /// The matrix supplied for Mahalanobis distances is not positive definite.
    NotPositiveDefinite,
    /// The requested feature extraction method is registered but not implemented.
    NotImplemented(String),
    /// A dataset split could not satisfy its contract.
    InvalidSplit(String),
    /// A pairwise distance computation failed; indices identify the pair.
    DistanceFailed {
        row: usize,
        col: usize,
        source: alloc::boxed::Box<Error>,
    },
    /// An experiment repetition failed; the index gives the context.
    Repetition {
        index: usize,
        source: alloc::boxed::Box<Error>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ShapeMismatch {
                expected,
                actual,
                context,
            } => write!(f, "shape mismatch in {context}: expected {expected}, got {actual}"),
            Error::UnknownBone(name) => write!(f, "unknown bone `{name}`"),
            Error::DofMismatch {
                bone,
                expected,
                actual,
            } => write!(
                f,
                "bone `{bone}` declares {expected} dof channels but {actual} values were supplied"
            ),
            Error::IncompatibleSkeletons(msg) => write!(f, "incompatible skeletons: {msg}"),
            Error::MissingJoint(name) => write!(f, "joint `{name}` not found"),
            Error::ZeroLengthSegment { frame, segment } => write!(
                f,
                "zero-length {segment} segment at frame {frame}: angle undefined"
            ),
            Error::EmptyTransform { largest_delta } => write!(
                f,
                "no direction reached the 1/2 eigenvalue threshold (largest was {largest_delta})"
            ),
            Error::Singular { condition, advice } => {
                write!(f, "matrix is singular (condition number {condition:e}); {advice}")
            }
            Error::NotPositiveDefinite => {
                write!(f, "matrix is not symmetric positive definite")
            }
            Error::NotImplemented(name) => write!(
                f,
                "extraction method `{name}` is registered but has no implementation"
            ),
            Error::InvalidSplit(msg) => write!(f, "invalid split: {msg}"),
            Error::DistanceFailed { row, col, source } => {
                write!(f, "distance for template pair ({row}, {col}) failed: {source}")
            }
            Error::Repetition { index, source } => {
                write!(f, "repetition {index} failed: {source}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
