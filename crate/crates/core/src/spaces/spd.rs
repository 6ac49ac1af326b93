//! Symmetric positive definite matrices under the Euclidean (Frobenius) or
//! log-Euclidean distance.
//!
//! Both charts are the isometric `vech` vectorization (of `A` or of
//! `log A`), so `h(x; q) = ‖x − vech(·)‖²` and the sandwich covariance
//! reduces to the ordinary covariance of the chart vectors.
//!
//! The Euclidean norm of a symmetric matrix is taken as
//! `‖A‖² = trace(A²)`, the Frobenius norm.

use nalgebra::{DMatrix, DVector};

use super::euclidean::QuadraticChart;
use crate::error::{Error, Result};
use crate::estimator::Strategy;
use crate::geometry::{Chart, Point, PointKind, Space};
use crate::linalg::{self, spd_expm, spd_logm, unvech, vech};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpdMetric {
    Euclidean,
    LogEuclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpdSpace {
    size: usize,
    metric: SpdMetric,
}

impl SpdSpace {
    pub fn new(size: usize, metric: SpdMetric) -> Self {
        assert!(size >= 1, "SPD space needs matrix size >= 1");
        Self { size, metric }
    }

    pub fn euclidean(size: usize) -> Self {
        Self::new(size, SpdMetric::Euclidean)
    }

    pub fn log_euclidean(size: usize) -> Self {
        Self::new(size, SpdMetric::LogEuclidean)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn metric(&self) -> SpdMetric {
        self.metric
    }

    /// `p(p+1)/2`.
    pub fn chart_dim(&self) -> usize {
        self.size * (self.size + 1) / 2
    }

    /// Chart vector of an SPD point: `vech(A)` or `vech(log A)`.
    pub fn chart_vector(&self, p: &Point) -> Result<DVector<f64>> {
        chart_vector(self.metric, p)
    }
}

fn matrix_of(p: &Point) -> Result<&DMatrix<f64>> {
    p.as_matrix().ok_or(Error::MixedSpacePoints {
        expected: PointKind::Spd,
        found: p.kind(),
    })
}

fn chart_vector(metric: SpdMetric, p: &Point) -> Result<DVector<f64>> {
    let a = matrix_of(p)?;
    Ok(match metric {
        SpdMetric::Euclidean => vech(a),
        SpdMetric::LogEuclidean => vech(&spd_logm(a)?),
    })
}

/// Sample mean: entrywise for the Euclidean metric, `expm(mean log A)` for
/// the log-Euclidean metric.
pub fn spd_mean(sample: &[Point], metric: SpdMetric) -> Result<Point> {
    let first = sample.first().ok_or(Error::EmptySample)?;
    let p = matrix_of(first)?.nrows();
    let mut acc = DMatrix::zeros(p, p);
    for q in sample {
        let a = matrix_of(q)?;
        if a.nrows() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: a.nrows(),
            });
        }
        match metric {
            SpdMetric::Euclidean => acc += a,
            SpdMetric::LogEuclidean => acc += spd_logm(a)?,
        }
    }
    acc /= sample.len() as f64;
    match metric {
        SpdMetric::Euclidean => Point::spd(linalg::symmetrize(&acc)),
        SpdMetric::LogEuclidean => Point::spd(spd_expm(&acc)?),
    }
}

impl Space for SpdSpace {
    fn kind(&self) -> PointKind {
        PointKind::Spd
    }

    fn spd_metric(&self) -> Option<SpdMetric> {
        Some(self.metric)
    }

    fn describe(&self) -> String {
        let m = match self.metric {
            SpdMetric::Euclidean => "euclidean",
            SpdMetric::LogEuclidean => "log-euclidean",
        };
        format!("SPD({}) ({m})", self.size)
    }

    fn validate(&self, p: &Point) -> Result<()> {
        let a = matrix_of(p)?;
        if a.nrows() != self.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                found: a.nrows(),
            });
        }
        Ok(())
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        let (a, b) = (matrix_of(p)?, matrix_of(q)?);
        Ok(match self.metric {
            SpdMetric::Euclidean => (a - b).norm(),
            SpdMetric::LogEuclidean => (spd_logm(a)? - spd_logm(b)?).norm(),
        })
    }

    fn chart_at<'a>(&'a self, _base: &Point) -> Result<Box<dyn Chart + 'a>> {
        let metric = self.metric;
        Ok(Box::new(QuadraticChart {
            dim: self.chart_dim(),
            target: move |p: &Point| chart_vector(metric, p),
            inverse: Box::new(move |x: &DVector<f64>| {
                let b = unvech(x)?;
                match metric {
                    SpdMetric::Euclidean => Point::spd(b),
                    SpdMetric::LogEuclidean => Point::spd(spd_expm(&b)?),
                }
            }),
        }))
    }

    fn strategy(&self) -> Strategy {
        Strategy::ClosedForm
    }

    fn exact_mean(&self, sample: &[Point]) -> Option<Result<Point>> {
        Some(spd_mean(sample, self.metric))
    }

    fn initial_guess(&self, sample: &[Point]) -> Result<Point> {
        spd_mean(sample, self.metric)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(xs: &[f64]) -> Point {
        Point::spd(DMatrix::from_diagonal(&DVector::from_column_slice(xs))).unwrap()
    }

    #[test]
    fn log_euclidean_mean_cancels_logs() {
        let e2 = 2f64.exp();
        let m = spd_mean(&[diag(&[e2, 1.0]), diag(&[1.0 / e2, 1.0])], SpdMetric::LogEuclidean)
            .unwrap();
        assert!((m.as_matrix().unwrap() - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn mean_of_repeated_matrix_is_that_matrix() {
        let a = Point::spd(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        for metric in [SpdMetric::Euclidean, SpdMetric::LogEuclidean] {
            let m = spd_mean(&[a.clone(), a.clone()], metric).unwrap();
            assert!((m.as_matrix().unwrap() - a.as_matrix().unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn euclidean_mean_is_entrywise() {
        let m = spd_mean(&[diag(&[1.0, 1.0]), diag(&[3.0, 1.0])], SpdMetric::Euclidean).unwrap();
        assert_eq!(m, diag(&[2.0, 1.0]));
    }

    #[test]
    fn log_euclidean_distance_is_frobenius_of_logs() {
        let space = SpdSpace::log_euclidean(2);
        let e = std::f64::consts::E;
        let d = space.distance(&diag(&[e, 1.0]), &diag(&[1.0, e])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn chart_round_trip() {
        let space = SpdSpace::log_euclidean(3);
        let a = Point::spd(DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0],
        ))
        .unwrap();
        let chart = space.chart_at(&a).unwrap();
        assert_eq!(chart.dim(), 6);
        let back = chart.inverse(&chart.forward(&a).unwrap()).unwrap();
        assert!((back.as_matrix().unwrap() - a.as_matrix().unwrap()).norm() < 1e-12);
    }
}
