use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::chi2_sf;
use crate::error::{Error, Result};
use crate::estimator::{estimate_mean, EstimateOptions};
use crate::geometry::{check_sample, Point, Space};
use crate::linalg::{self, spectral_inverse};
use crate::ser;

/// Two-sample chi-square test of equal means on chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSampleResult {
    /// `(X̄ − Ȳ)ᵀ Σ⁻¹ (X̄ − Ȳ)`.
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    #[serde(serialize_with = "ser::vector")]
    pub mean_x: DVector<f64>,
    #[serde(serialize_with = "ser::vector")]
    pub mean_y: DVector<f64>,
    /// `Σ_X/n₁ + Σ_Y/n₂`.
    #[serde(serialize_with = "ser::matrix")]
    pub pooled_cov: DMatrix<f64>,
}

fn mean_and_cov(vs: &[DVector<f64>], dim: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mut mean = DVector::zeros(dim);
    for v in vs {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        mean += v;
    }
    mean /= vs.len() as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    if vs.len() > 1 {
        for v in vs {
            let d = v - &mean;
            cov += &d * d.transpose();
        }
        cov /= (vs.len() - 1) as f64;
    }
    Ok((mean, cov))
}

/// Test statistic on already-vectorized samples.
pub fn two_sample_statistic(xs: &[DVector<f64>], ys: &[DVector<f64>]) -> Result<TwoSampleResult> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = xs[0].len();
    if s == 0 {
        return Err(Error::InvalidArgument("chart dimension is zero".into()));
    }
    if xs.len() + ys.len() < s + 2 {
        return Err(Error::InsufficientSample {
            required: s + 2,
            found: xs.len() + ys.len(),
        });
    }
    let (mean_x, cov_x) = mean_and_cov(xs, s)?;
    let (mean_y, cov_y) = mean_and_cov(ys, s)?;
    let pooled = linalg::symmetrize(&(cov_x / xs.len() as f64 + cov_y / ys.len() as f64));
    let inv = spectral_inverse(&pooled);
    if !inv.is_well_conditioned() {
        return Err(Error::NearSingularCovariance {
            condition: inv.condition,
        });
    }
    let d = &mean_x - &mean_y;
    let statistic = linalg::quad_form(&inv.inverse, &d).max(0.0);
    Ok(TwoSampleResult {
        statistic,
        dof: s,
        p_value: chi2_sf(statistic, s),
        n1: xs.len(),
        n2: ys.len(),
        mean_x,
        mean_y,
        pooled_cov: pooled,
    })
}

/// Vectorizes both samples in one chart, taken at the pooled sample mean,
/// and runs [`two_sample_statistic`].
pub fn two_sample_test<S: Space + ?Sized>(
    space: &S,
    x: &[Point],
    y: &[Point],
    opts: &EstimateOptions,
) -> Result<TwoSampleResult> {
    check_sample(space, x)?;
    check_sample(space, y)?;
    let pooled: Vec<Point> = x.iter().chain(y).cloned().collect();
    let center = estimate_mean(space, &pooled, opts)?.mean;
    let chart = space.chart_at(&center)?;
    let xs = x.iter().map(|p| chart.forward(p)).collect::<Result<Vec<_>>>()?;
    let ys = y.iter().map(|p| chart.forward(p)).collect::<Result<Vec<_>>>()?;
    two_sample_statistic(&xs, &ys)
}
