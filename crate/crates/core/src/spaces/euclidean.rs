use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimator::Strategy;
use crate::geometry::{Chart, DiffConfig, Derivatives, Point, PointKind, Space};

/// `R^s` with the Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EuclideanSpace {
    dim: usize,
}

impl EuclideanSpace {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "Euclidean space needs dimension >= 1");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub(crate) fn vector_of(p: &Point) -> Result<&DVector<f64>> {
    p.as_vector()
        .ok_or_else(|| Error::InvalidPoint(format!("expected a vector point, got {:?}", p.kind())))
}

/// Arithmetic mean of equal-length vectors.
pub(crate) fn mean_vector<'a>(vs: impl IntoIterator<Item = &'a DVector<f64>>) -> DVector<f64> {
    let mut sum: Option<DVector<f64>> = None;
    let mut n = 0usize;
    for v in vs {
        match sum.as_mut() {
            Some(s) => *s += v,
            None => sum = Some(v.clone()),
        }
        n += 1;
    }
    sum.expect("mean of an empty set") / n as f64
}

/// Identity chart with `h(x; q) = ‖x − q‖²`.
pub(crate) struct QuadraticChart<F> {
    pub dim: usize,
    /// Chart coordinates of a sample point.
    pub target: F,
    pub inverse: Box<dyn Fn(&DVector<f64>) -> Result<Point> + Send + Sync>,
}

impl<F> Chart for QuadraticChart<F>
where
    F: Fn(&Point) -> Result<DVector<f64>>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn forward(&self, p: &Point) -> Result<DVector<f64>> {
        (self.target)(p)
    }
    fn inverse(&self, x: &DVector<f64>) -> Result<Point> {
        (self.inverse)(x)
    }
    fn h(&self, x: &DVector<f64>, q: &Point) -> Result<f64> {
        Ok((x - (self.target)(q)?).norm_squared())
    }
    fn grad_h(&self, x: &DVector<f64>, q: &Point, _: &DiffConfig) -> Result<DVector<f64>> {
        Ok((x - (self.target)(q)?) * 2.0)
    }
    fn hess_h(&self, _: &DVector<f64>, _: &Point, _: &DiffConfig) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.dim, self.dim) * 2.0)
    }
    fn derivatives(&self) -> Derivatives {
        Derivatives::Analytic
    }
}

impl Space for EuclideanSpace {
    fn kind(&self) -> PointKind {
        PointKind::Euclidean
    }

    fn describe(&self) -> String {
        format!("euclidean R^{}", self.dim)
    }

    fn validate(&self, p: &Point) -> Result<()> {
        let v = vector_of(p)?;
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        Ok((vector_of(p)? - vector_of(q)?).norm())
    }

    fn chart_at<'a>(&'a self, _base: &Point) -> Result<Box<dyn Chart + 'a>> {
        Ok(Box::new(QuadraticChart {
            dim: self.dim,
            target: |p: &Point| vector_of(p).cloned(),
            inverse: Box::new(|x: &DVector<f64>| Point::euclidean(x.clone())),
        }))
    }

    fn strategy(&self) -> Strategy {
        Strategy::ClosedForm
    }

    fn exact_mean(&self, sample: &[Point]) -> Option<Result<Point>> {
        Some((|| {
            let vs = sample.iter().map(vector_of).collect::<Result<Vec<_>>>()?;
            if vs.is_empty() {
                return Err(Error::EmptySample);
            }
            Point::euclidean(mean_vector(vs))
        })())
    }

    fn initial_guess(&self, sample: &[Point]) -> Result<Point> {
        self.exact_mean(sample).expect("closed form exists")
    }
}
