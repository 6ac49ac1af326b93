use thiserror::Error;

use crate::geometry::{Point, PointKind};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,

    #[error("points from different spaces: expected {expected:?}, found {found:?}")]
    MixedSpacePoints { expected: PointKind, found: PointKind },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("function returned a non-finite value at a probe point")]
    NonFiniteValue,

    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NoConvergence {
        iterations: usize,
        grad_norm: f64,
        last: Box<Point>,
    },

    #[error("Hessian average is near singular (condition number {condition:e})")]
    NearSingularHessian { condition: f64 },

    #[error("covariance is near singular (condition number {condition:e})")]
    NearSingularCovariance { condition: f64 },

    #[error("point lies on the cut locus of the chart base")]
    CutLocus,

    #[error("projection onto the sphere is not unique (ambient mean at the origin)")]
    NonUniqueProjection,

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("point is outside the chart domain: {0}")]
    OutsideChart(String),

    #[error("need at least {required} observations, got {found}")]
    InsufficientSample { required: usize, found: usize },

    #[error("invalid sampler descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{failures} of {reps} Monte Carlo replications failed (last error: {last})")]
    TooManyFailures {
        failures: usize,
        reps: usize,
        last: String,
    },
}
