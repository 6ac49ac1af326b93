//! The unit sphere `S^d ⊂ R^{d+1}`, with either the geodesic (intrinsic) or
//! the chordal (extrinsic, inclusion-embedded) distance.

use nalgebra::{DMatrix, DVector};

use super::euclidean::{mean_vector, vector_of};
use crate::error::{Error, Result};
use crate::estimator::Strategy;
use crate::geometry::{Chart, DiffConfig, Derivatives, ExpLog, Point, PointKind, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereMetric {
    Intrinsic,
    Extrinsic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereSpace {
    ambient: usize,
    metric: SphereMetric,
}

impl SphereSpace {
    /// Sphere of unit vectors in `R^ambient` (so `S^{ambient-1}`).
    pub fn new(ambient: usize, metric: SphereMetric) -> Self {
        assert!(ambient >= 2, "sphere needs ambient dimension >= 2");
        Self { ambient, metric }
    }

    pub fn intrinsic(ambient: usize) -> Self {
        Self::new(ambient, SphereMetric::Intrinsic)
    }

    pub fn extrinsic(ambient: usize) -> Self {
        Self::new(ambient, SphereMetric::Extrinsic)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn metric(&self) -> SphereMetric {
        self.metric
    }
}

/// Great-circle distance, computed as `2 atan2(‖p − q‖, ‖p + q‖)`, which
/// stays accurate for nearly equal and nearly antipodal points.
pub fn geodesic_distance(p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    2.0 * (p - q).norm().atan2((p + q).norm())
}

/// `cos‖v‖ · base + sin‖v‖ · v/‖v‖`.
pub fn sphere_exp(base: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let t = v.norm();
    if t == 0.0 {
        return base.clone();
    }
    let p = base * t.cos() + v * (t.sin() / t);
    let norm = p.norm();
    p / norm
}

/// Inverse of [`sphere_exp`] on the open ball of radius `π`.
pub fn sphere_log(base: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>> {
    if (p + base).norm() < 1e-9 {
        return Err(Error::CutLocus);
    }
    let w = p - base * p.dot(base);
    let wn = w.norm();
    if wn == 0.0 {
        return Ok(DVector::zeros(base.len()));
    }
    Ok(w * (geodesic_distance(base, p) / wn))
}

/// Nearest point on the sphere to an ambient vector.
pub fn extrinsic_project(m: &DVector<f64>) -> Result<DVector<f64>> {
    let norm = m.norm();
    if !(norm > 1e-12) {
        return Err(Error::NonUniqueProjection);
    }
    Ok(m / norm)
}

/// Orthonormal basis of the tangent space at `base`, as columns of an
/// `ambient × (ambient − 1)` matrix.
pub fn tangent_basis(base: &DVector<f64>) -> DMatrix<f64> {
    let n = base.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| base[i].abs().total_cmp(&base[j].abs()));
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for &i in order.iter().take(n - 1) {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        for _ in 0..2 {
            e -= base * base.dot(&e);
            for c in &cols {
                e -= c * c.dot(&e);
            }
        }
        let norm = e.norm();
        cols.push(e / norm);
    }
    DMatrix::from_columns(&cols)
}

fn unit_of(p: &Point) -> Result<&DVector<f64>> {
    match p {
        Point::Sphere(v) => Ok(v),
        other => Err(Error::MixedSpacePoints {
            expected: PointKind::Sphere,
            found: other.kind(),
        }),
    }
}

/// Normal coordinates at `base`: `φ(p) = Eᵀ log_base(p)`.
struct NormalChart {
    base: DVector<f64>,
    basis: DMatrix<f64>,
}

impl Chart for NormalChart {
    fn dim(&self) -> usize {
        self.basis.ncols()
    }

    fn forward(&self, p: &Point) -> Result<DVector<f64>> {
        Ok(self.basis.transpose() * sphere_log(&self.base, unit_of(p)?)?)
    }

    fn inverse(&self, x: &DVector<f64>) -> Result<Point> {
        Ok(Point::Sphere(sphere_exp(&self.base, &(&self.basis * x))))
    }

    fn h(&self, x: &DVector<f64>, q: &Point) -> Result<f64> {
        let p = sphere_exp(&self.base, &(&self.basis * x));
        Ok(geodesic_distance(&p, unit_of(q)?).powi(2))
    }

    /// Closed form at the chart origin (`-2 log_base(q)`), finite
    /// differences elsewhere.
    fn grad_h(&self, x: &DVector<f64>, q: &Point, cfg: &DiffConfig) -> Result<DVector<f64>> {
        if x.iter().all(|&v| v == 0.0) {
            let log = sphere_log(&self.base, unit_of(q)?)?;
            return Ok(self.basis.transpose() * log * -2.0);
        }
        crate::geometry::numeric_gradient(|y| self.h(y, q), x, cfg)
    }
}

/// Orthogonal projection onto the tangent plane at `base`, valid on the open
/// hemisphere around it: `φ(p) = Eᵀ p`, `φ⁻¹(x) = E x + √(1 − ‖x‖²) base`.
struct ProjectionChart {
    base: DVector<f64>,
    basis: DMatrix<f64>,
}

impl ProjectionChart {
    fn lift(&self, x: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let r2 = x.norm_squared();
        if !(r2 < 1.0) {
            return Err(Error::OutsideChart(format!(
                "projection chart needs |x| < 1, got {}",
                r2.sqrt()
            )));
        }
        let c = (1.0 - r2).sqrt();
        Ok((&self.basis * x + &self.base * c, c))
    }
}

impl Chart for ProjectionChart {
    fn dim(&self) -> usize {
        self.basis.ncols()
    }

    fn forward(&self, p: &Point) -> Result<DVector<f64>> {
        let u = unit_of(p)?;
        if !(u.dot(&self.base) > 0.0) {
            return Err(Error::OutsideChart(
                "point is not in the open hemisphere of the chart base".into(),
            ));
        }
        Ok(self.basis.transpose() * u)
    }

    fn inverse(&self, x: &DVector<f64>) -> Result<Point> {
        let (p, _) = self.lift(x)?;
        Ok(Point::Sphere(p))
    }

    fn h(&self, x: &DVector<f64>, q: &Point) -> Result<f64> {
        let (p, _) = self.lift(x)?;
        Ok((p - unit_of(q)?).norm_squared())
    }

    fn grad_h(&self, x: &DVector<f64>, q: &Point, _: &DiffConfig) -> Result<DVector<f64>> {
        let (_, c) = self.lift(x)?;
        let q = unit_of(q)?;
        let bq = self.base.dot(q);
        Ok((self.basis.transpose() * q - x * (bq / c)) * -2.0)
    }

    fn hess_h(&self, x: &DVector<f64>, q: &Point, _: &DiffConfig) -> Result<DMatrix<f64>> {
        let (_, c) = self.lift(x)?;
        let bq = self.base.dot(unit_of(q)?);
        let s = x.len();
        let m = DMatrix::identity(s, s) / c + x * x.transpose() / (c * c * c);
        Ok(m * (2.0 * bq))
    }

    fn derivatives(&self) -> Derivatives {
        Derivatives::Analytic
    }
}

impl ExpLog for SphereSpace {
    fn exp(&self, base: &Point, v: &DVector<f64>) -> Result<Point> {
        Ok(Point::Sphere(sphere_exp(unit_of(base)?, v)))
    }

    fn log(&self, base: &Point, p: &Point) -> Result<DVector<f64>> {
        sphere_log(unit_of(base)?, unit_of(p)?)
    }
}

impl SphereSpace {
    fn projected_mean(&self, sample: &[Point]) -> Result<Point> {
        let vs = sample.iter().map(vector_of).collect::<Result<Vec<_>>>()?;
        if vs.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Point::Sphere(extrinsic_project(&mean_vector(vs))?))
    }
}

impl Space for SphereSpace {
    fn kind(&self) -> PointKind {
        PointKind::Sphere
    }

    fn describe(&self) -> String {
        let m = match self.metric {
            SphereMetric::Intrinsic => "intrinsic",
            SphereMetric::Extrinsic => "extrinsic",
        };
        format!("sphere S^{} ({m})", self.ambient - 1)
    }

    fn validate(&self, p: &Point) -> Result<()> {
        let u = unit_of(p)?;
        if u.len() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: u.len(),
            });
        }
        Ok(())
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        let (p, q) = (unit_of(p)?, unit_of(q)?);
        Ok(match self.metric {
            SphereMetric::Intrinsic => geodesic_distance(p, q),
            SphereMetric::Extrinsic => (p - q).norm(),
        })
    }

    fn chart_at<'a>(&'a self, base: &Point) -> Result<Box<dyn Chart + 'a>> {
        let base = unit_of(base)?.clone();
        let basis = tangent_basis(&base);
        Ok(match self.metric {
            SphereMetric::Intrinsic => Box::new(NormalChart { base, basis }),
            SphereMetric::Extrinsic => Box::new(ProjectionChart { base, basis }),
        })
    }

    fn strategy(&self) -> Strategy {
        match self.metric {
            SphereMetric::Intrinsic => Strategy::Karcher,
            SphereMetric::Extrinsic => Strategy::ClosedForm,
        }
    }

    fn exact_mean(&self, sample: &[Point]) -> Option<Result<Point>> {
        match self.metric {
            SphereMetric::Intrinsic => None,
            SphereMetric::Extrinsic => Some(self.projected_mean(sample)),
        }
    }

    fn geodesic(&self) -> Option<&dyn ExpLog> {
        match self.metric {
            SphereMetric::Intrinsic => Some(self),
            SphereMetric::Extrinsic => None,
        }
    }

    fn initial_guess(&self, sample: &[Point]) -> Result<Point> {
        match self.projected_mean(sample) {
            Err(Error::NonUniqueProjection) => sample.first().cloned().ok_or(Error::EmptySample),
            other => other,
        }
    }
}
