//! Sample Fréchet means and their sandwich covariance in chart coordinates.
//!
//! For a fitted mean `μₙ` with chart coordinates `νₙ = φ(μₙ)`:
//!
//! ```text
//! Λₙ = (1/n) Σ ∇²h(νₙ; Yⱼ)
//! Cₙ = (1/n) Σ ∇h(νₙ; Yⱼ) ∇h(νₙ; Yⱼ)ᵀ
//! √n (νₙ − ν) ≈ N(0, Λₙ⁻¹ Cₙ Λₙ⁻¹)
//! ```
//!
//! Charts are taken at the estimated mean.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{check_sample, frechet_value, Chart, DiffConfig, ExpLog, Point, Space};
use crate::inference::chi2_quantile;
use crate::linalg::{self, spectral_inverse};
use crate::ser;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Damped Newton iteration on chart coordinates, re-charted each step.
    Newton,
    /// `μ ← Exp_μ(τ · mean Log_μ Yⱼ)`.
    Karcher,
    ClosedForm,
    OpenBookExact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    /// Bound on `‖(1/n) Σ ∇h(νₙ; Yⱼ)‖` for iterative strategies.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub diff: DiffConfig,
    /// Overrides the space's default strategy.
    pub strategy: Option<Strategy>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
            diff: DiffConfig::default(),
            strategy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichCovariance {
    #[serde(serialize_with = "ser::matrix")]
    pub lambda_n: DMatrix<f64>,
    #[serde(serialize_with = "ser::matrix")]
    pub c_n: DMatrix<f64>,
    /// `Λₙ⁻¹ Cₙ Λₙ⁻¹`; divide by `n` for the covariance of `νₙ`.
    #[serde(serialize_with = "ser::matrix")]
    pub asym_cov: DMatrix<f64>,
    pub lambda_condition: f64,
    pub lambda_positive_definite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrechetFit {
    pub mean: Point,
    #[serde(serialize_with = "ser::vector")]
    pub chart_coords: DVector<f64>,
    pub n: usize,
    pub iterations: usize,
    pub grad_norm: f64,
    pub strategy: Strategy,
    pub covariance: Option<SandwichCovariance>,
}

impl FrechetFit {
    pub fn chart_dim(&self) -> usize {
        self.chart_coords.len()
    }

    /// Estimated covariance of `νₙ`, i.e. `asym_cov / n`.
    pub fn estimator_covariance(&self) -> Option<DMatrix<f64>> {
        self.covariance
            .as_ref()
            .map(|c| &c.asym_cov / self.n as f64)
    }
}

/// `(1/n) Σ ∇h(x; Yⱼ)`.
pub fn mean_gradient(
    chart: &dyn Chart,
    x: &DVector<f64>,
    sample: &[Point],
    cfg: &DiffConfig,
) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(chart.dim());
    for q in sample {
        g += chart.grad_h(x, q, cfg)?;
    }
    Ok(g / sample.len() as f64)
}

fn mean_hessian(
    chart: &dyn Chart,
    x: &DVector<f64>,
    sample: &[Point],
    cfg: &DiffConfig,
) -> Result<DMatrix<f64>> {
    let s = chart.dim();
    let mut h = DMatrix::zeros(s, s);
    for q in sample {
        h += chart.hess_h(x, q, cfg)?;
    }
    Ok(h / sample.len() as f64)
}

/// Accepts a trial point when the Fréchet function does not increase beyond
/// rounding.
fn no_increase(trial: f64, current: f64) -> bool {
    trial <= current + 1e-12 * current.abs() + f64::MIN_POSITIVE
}

fn karcher<S: Space + ?Sized>(
    space: &S,
    geo: &dyn ExpLog,
    sample: &[Point],
    opts: &EstimateOptions,
) -> Result<(Point, usize)> {
    let mut mu = space.initial_guess(sample)?;
    let mut grad_norm = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let mut v = geo.log(&mu, &sample[0])?;
        for q in &sample[1..] {
            v += geo.log(&mu, q)?;
        }
        v /= sample.len() as f64;
        grad_norm = 2.0 * v.norm();
        if grad_norm <= opts.tolerance {
            return Ok((mu, it));
        }
        let f0 = frechet_value(space, sample, None, &mu)?;
        let mut tau = 1.0;
        let next = loop {
            let trial = geo.exp(&mu, &(&v * tau))?;
            if no_increase(frechet_value(space, sample, None, &trial)?, f0) || tau < 1e-8 {
                break trial;
            }
            tau *= 0.5;
        };
        mu = next;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        grad_norm,
        last: Box::new(mu),
    })
}

fn newton<S: Space + ?Sized>(
    space: &S,
    sample: &[Point],
    opts: &EstimateOptions,
) -> Result<(Point, usize)> {
    let mut mu = space.initial_guess(sample)?;
    let mut grad_norm = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let chart = space.chart_at(&mu)?;
        let x = chart.forward(&mu)?;
        let g = mean_gradient(chart.as_ref(), &x, sample, &opts.diff)?;
        grad_norm = g.norm();
        if grad_norm <= opts.tolerance {
            return Ok((mu, it));
        }
        let hess = mean_hessian(chart.as_ref(), &x, sample, &opts.diff)?;
        let inv = spectral_inverse(&hess);
        // Gradient step with the curvature of a flat squared distance when the
        // Hessian is unusable.
        let step = if inv.positive_definite && inv.is_well_conditioned() {
            -(&inv.inverse * &g)
        } else {
            -&g * 0.5
        };
        let f0 = frechet_value(space, sample, None, &mu)?;
        let mut tau = 1.0;
        let next = loop {
            if tau < 1e-10 {
                return Err(Error::NoConvergence {
                    iterations: it,
                    grad_norm,
                    last: Box::new(mu),
                });
            }
            if let Ok(trial) = chart.inverse(&(&x + &step * tau)) {
                if no_increase(frechet_value(space, sample, None, &trial)?, f0) {
                    break trial;
                }
            }
            tau *= 0.5;
        };
        mu = next;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        grad_norm,
        last: Box::new(mu),
    })
}

/// Finds a stationary point of the empirical Fréchet function. Covariance
/// fields are left empty.
pub fn estimate_mean<S: Space + ?Sized>(
    space: &S,
    sample: &[Point],
    opts: &EstimateOptions,
) -> Result<FrechetFit> {
    check_sample(space, sample)?;
    let strategy = opts.strategy.unwrap_or_else(|| space.strategy());
    let (mean, iterations) = match strategy {
        Strategy::ClosedForm | Strategy::OpenBookExact => {
            let mean = space.exact_mean(sample).ok_or_else(|| {
                Error::InvalidArgument(format!("{} has no exact mean", space.describe()))
            })??;
            (mean, 0)
        }
        Strategy::Karcher => {
            let geo = space.geodesic().ok_or_else(|| {
                Error::InvalidArgument(format!("{} has no exp/log maps", space.describe()))
            })?;
            karcher(space, geo, sample, opts)?
        }
        Strategy::Newton => newton(space, sample, opts)?,
    };
    let chart = space.chart_at(&mean)?;
    let chart_coords = chart.forward(&mean)?;
    let grad_norm = mean_gradient(chart.as_ref(), &chart_coords, sample, &opts.diff)?.norm();
    Ok(FrechetFit {
        mean,
        chart_coords,
        n: sample.len(),
        iterations,
        grad_norm,
        strategy,
        covariance: None,
    })
}

/// Fills in `Λₙ`, `Cₙ` and `Λₙ⁻¹ Cₙ Λₙ⁻¹` for a fit on the same sample.
pub fn sandwich_covariance<S: Space + ?Sized>(
    space: &S,
    sample: &[Point],
    fit: FrechetFit,
    cfg: &DiffConfig,
) -> Result<FrechetFit> {
    check_sample(space, sample)?;
    if sample.len() != fit.n {
        return Err(Error::DimensionMismatch {
            expected: fit.n,
            found: sample.len(),
        });
    }
    let chart = space.chart_at(&fit.mean)?;
    let nu = chart.forward(&fit.mean)?;
    let s = chart.dim();
    let n = sample.len() as f64;

    let mut lambda = DMatrix::zeros(s, s);
    let mut c = DMatrix::zeros(s, s);
    for q in sample {
        let g = chart.grad_h(&nu, q, cfg)?;
        c += &g * g.transpose();
        lambda += chart.hess_h(&nu, q, cfg)?;
    }
    lambda /= n;
    c /= n;
    let lambda = linalg::symmetrize(&lambda);
    let c = linalg::symmetrize(&c);

    let inv = spectral_inverse(&lambda);
    if !inv.is_well_conditioned() {
        return Err(Error::NearSingularHessian {
            condition: inv.condition,
        });
    }
    let asym = linalg::symmetrize(&(&inv.inverse * &c * &inv.inverse));
    Ok(FrechetFit {
        chart_coords: nu,
        covariance: Some(SandwichCovariance {
            lambda_n: lambda,
            c_n: c,
            asym_cov: asym,
            lambda_condition: inv.condition,
            lambda_positive_definite: inv.positive_definite,
        }),
        ..fit
    })
}

/// [`estimate_mean`] followed by [`sandwich_covariance`].
pub fn fit<S: Space + ?Sized>(
    space: &S,
    sample: &[Point],
    opts: &EstimateOptions,
) -> Result<FrechetFit> {
    let fit = estimate_mean(space, sample, opts)?;
    sandwich_covariance(space, sample, fit, &opts.diff)
}

/// `n (νₙ − x)ᵀ asym_cov⁻¹ (νₙ − x)`.
pub fn confidence_statistic(fit: &FrechetFit, candidate: &DVector<f64>) -> Result<f64> {
    let cov = fit.covariance.as_ref().ok_or_else(|| {
        Error::InvalidArgument("fit has no covariance; run sandwich_covariance first".into())
    })?;
    if candidate.len() != fit.chart_dim() {
        return Err(Error::DimensionMismatch {
            expected: fit.chart_dim(),
            found: candidate.len(),
        });
    }
    if fit.chart_dim() == 0 {
        return Ok(0.0);
    }
    let inv = spectral_inverse(&cov.asym_cov);
    if !inv.is_well_conditioned() {
        return Err(Error::NearSingularCovariance {
            condition: inv.condition,
        });
    }
    let d = &fit.chart_coords - candidate;
    Ok(fit.n as f64 * linalg::quad_form(&inv.inverse, &d))
}

/// Whether a statistic lies in the `(1 − α)` region of `χ²_s` (inclusive).
pub fn within_region(statistic: f64, dof: usize, alpha: f64) -> Result<bool> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0,1), got {alpha}")));
    }
    if dof == 0 {
        return Ok(statistic <= 0.0);
    }
    Ok(statistic <= chi2_quantile(1.0 - alpha, dof))
}

/// Whether chart coordinates lie in the CLT confidence ellipsoid.
pub fn confidence_region_contains(
    fit: &FrechetFit,
    candidate: &DVector<f64>,
    alpha: f64,
) -> Result<bool> {
    let stat = confidence_statistic(fit, candidate)?;
    within_region(stat, fit.chart_dim(), alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NumericDerivatives;
    use crate::spaces::{EuclideanSpace, OpenBookSpace, SphereSpace};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn euclid(points: &[&[f64]]) -> Vec<Point> {
        points.iter().map(|p| Point::euclidean(v(p)).unwrap()).collect()
    }

    #[test]
    fn euclidean_mean_is_arithmetic() {
        let sample = euclid(&[&[0.0, 0.0], &[2.0, 0.0], &[1.0, 3.0]]);
        let fit = estimate_mean(&EuclideanSpace::new(2), &sample, &Default::default()).unwrap();
        assert_eq!(fit.mean, Point::euclidean(v(&[1.0, 1.0])).unwrap());
        assert_eq!(fit.strategy, Strategy::ClosedForm);
        assert!(fit.grad_norm <= 1e-10);
    }

    #[test]
    fn sandwich_in_one_dimension() {
        let sample = euclid(&[&[-1.0], &[1.0]]);
        let f = fit(&EuclideanSpace::new(1), &sample, &Default::default()).unwrap();
        let cov = f.covariance.unwrap();
        assert!((cov.lambda_n[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((cov.c_n[(0, 0)] - 4.0).abs() < 1e-15);
        assert!((cov.asym_cov[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_symmetric_pair_has_pole_mean() {
        let t = 0.3f64;
        let sample = vec![
            Point::sphere(v(&[t.sin(), 0.0, t.cos()])).unwrap(),
            Point::sphere(v(&[-t.sin(), 0.0, t.cos()])).unwrap(),
        ];
        let f = estimate_mean(&SphereSpace::intrinsic(3), &sample, &Default::default()).unwrap();
        let m = f.mean.as_vector().unwrap();
        assert!((m - v(&[0.0, 0.0, 1.0])).norm() < 1e-12);
        assert_eq!(f.strategy, Strategy::Karcher);
    }

    #[test]
    fn newton_agrees_with_karcher_on_the_sphere() {
        let sample: Vec<Point> = [[0.3, 0.1, 1.0], [-0.2, 0.25, 1.0], [0.05, -0.3, 0.9], [0.4, 0.4, 1.0]]
            .iter()
            .map(|p| Point::sphere_normalized(v(p)).unwrap())
            .collect();
        let space = SphereSpace::intrinsic(3);
        let k = estimate_mean(&space, &sample, &Default::default()).unwrap();
        let opts = EstimateOptions {
            strategy: Some(Strategy::Newton),
            ..Default::default()
        };
        let n = estimate_mean(&space, &sample, &opts).unwrap();
        assert!(n.grad_norm <= 1e-10);
        assert!(space.distance(&k.mean, &n.mean).unwrap() < 1e-10);
    }

    #[test]
    fn open_book_single_point() {
        let p = Point::open_book(2, v(&[5.0, 1.0])).unwrap();
        let f = estimate_mean(&OpenBookSpace::new(3, 1), std::slice::from_ref(&p), &Default::default()).unwrap();
        assert_eq!(f.mean, p);
        assert_eq!(f.strategy, Strategy::OpenBookExact);
    }

    #[test]
    fn degenerate_spine_chart_has_empty_covariance() {
        let space = OpenBookSpace::new(3, 0);
        let sample: Vec<Point> = (1..=3)
            .map(|k| Point::open_book(k, v(&[1.0])).unwrap())
            .collect();
        let f = fit(&space, &sample, &Default::default()).unwrap();
        assert_eq!(f.chart_dim(), 0);
        assert_eq!(f.covariance.as_ref().unwrap().asym_cov.shape(), (0, 0));
        assert!(confidence_region_contains(&f, &DVector::zeros(0), 0.05).unwrap());
    }

    #[test]
    fn numeric_and_analytic_sandwich_agree() {
        let sample = euclid(&[&[0.1, 2.0], &[1.5, -0.3], &[0.7, 0.9], &[-0.4, 1.1]]);
        let a = fit(&EuclideanSpace::new(2), &sample, &Default::default()).unwrap();
        let n = fit(&NumericDerivatives(EuclideanSpace::new(2)), &sample, &Default::default())
            .unwrap();
        let (ca, cn) = (a.covariance.unwrap(), n.covariance.unwrap());
        assert!((ca.asym_cov - cn.asym_cov).amax() < 1e-6);
    }

    #[test]
    fn region_examples() {
        let sample = euclid(&[&[-1.0], &[1.0]]);
        let mut f = fit(&EuclideanSpace::new(1), &sample, &Default::default()).unwrap();
        assert!(confidence_region_contains(&f, &f.chart_coords.clone(), 0.999).unwrap());

        // asym_cov = 1, n = 100, νₙ = 0, candidate 0.3: statistic 9 > 3.841.
        f.n = 100;
        assert!((confidence_statistic(&f, &v(&[0.3])).unwrap() - 9.0).abs() < 1e-12);
        assert!(!confidence_region_contains(&f, &v(&[0.3]), 0.05).unwrap());

        let q = chi2_quantile(0.95, 6);
        assert!(within_region(q, 6, 0.05).unwrap());
        assert!(!within_region(q * (1.0 + 1e-12), 6, 0.05).unwrap());
        assert!(within_region(1.0, 1, 1.5).is_err());
    }

    #[test]
    fn covariance_must_be_populated() {
        let sample = euclid(&[&[0.0], &[1.0]]);
        let f = estimate_mean(&EuclideanSpace::new(1), &sample, &Default::default()).unwrap();
        assert!(confidence_statistic(&f, &v(&[0.0])).is_err());
    }

    #[test]
    fn single_point_covariance_is_singular_for_the_region() {
        let sample = euclid(&[&[3.0, 4.0]]);
        let f = fit(&EuclideanSpace::new(2), &sample, &Default::default()).unwrap();
        assert_eq!(f.covariance.as_ref().unwrap().asym_cov, DMatrix::zeros(2, 2));
        assert!(matches!(
            confidence_statistic(&f, &v(&[3.0, 4.0])),
            Err(Error::NearSingularCovariance { .. })
        ));
    }

    #[test]
    fn mixed_points_are_rejected() {
        let sample = vec![
            Point::euclidean(v(&[0.0, 0.0, 1.0])).unwrap(),
            Point::sphere(v(&[0.0, 0.0, 1.0])).unwrap(),
        ];
        assert!(matches!(
            estimate_mean(&EuclideanSpace::new(3), &sample, &Default::default()),
            Err(Error::MixedSpacePoints { .. })
        ));
    }
}
