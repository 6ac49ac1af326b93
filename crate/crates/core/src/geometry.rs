//! Points, spaces, charts and the finite-difference machinery shared by every
//! concrete sample space.
//!
//! A [`Space`] supplies a distance and, for any base point, a [`Chart`]: a
//! local coordinate system `φ` together with the squared-distance function
//! `h(x; q) = ρ²(φ⁻¹(x), q)`. The estimator works exclusively through
//! these two traits.

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimator::Strategy;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Euclidean,
    Sphere,
    Spd,
    OpenBook,
}

/// A point of the open book: a leaf label and coordinates `(x⁰, x¹, …, x^D)`.
/// Leaf `0` is the spine, on which `x⁰ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BookPoint {
    leaf: usize,
    coords: DVector<f64>,
}

impl BookPoint {
    pub fn leaf(&self) -> usize {
        self.leaf
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// The zero-th (distance-from-spine) coordinate.
    pub fn height(&self) -> f64 {
        self.coords[0]
    }

    /// Coordinates along the spine, `(x¹, …, x^D)`.
    pub fn spine_coords(&self) -> DVector<f64> {
        self.coords.rows(1, self.coords.len() - 1).into_owned()
    }

    pub fn on_spine(&self) -> bool {
        self.leaf == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Euclidean(DVector<f64>),
    Sphere(DVector<f64>),
    Spd(DMatrix<f64>),
    OpenBook(BookPoint),
}

fn all_finite<'a>(mut it: impl Iterator<Item = &'a f64>) -> bool {
    it.all(|v| v.is_finite())
}

impl Point {
    pub fn euclidean(v: impl Into<DVector<f64>>) -> Result<Self> {
        let v = v.into();
        if !all_finite(v.iter()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        Ok(Point::Euclidean(v))
    }

    /// A unit vector; the norm must be 1 within `1e-12`.
    pub fn sphere(v: impl Into<DVector<f64>>) -> Result<Self> {
        let v = v.into();
        if !all_finite(v.iter()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPoint(format!(
                "sphere point has norm {norm}, expected 1"
            )));
        }
        Ok(Point::Sphere(v))
    }

    /// Rescales a nonzero vector onto the unit sphere.
    pub fn sphere_normalized(v: impl Into<DVector<f64>>) -> Result<Self> {
        let v = v.into();
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidPoint("cannot normalize a zero vector".into()));
        }
        Ok(Point::Sphere(v / norm))
    }

    /// A symmetric positive definite matrix.
    pub fn spd(m: DMatrix<f64>) -> Result<Self> {
        if !all_finite(m.iter()) {
            return Err(Error::InvalidPoint("non-finite matrix entry".into()));
        }
        linalg::spd_eigen(&m)?;
        Ok(Point::Spd(m))
    }

    /// An open-book point. A zero height is canonicalized onto the spine
    /// (leaf `0`); a positive height on leaf `0` is rejected.
    pub fn open_book(leaf: usize, coords: impl Into<DVector<f64>>) -> Result<Self> {
        let coords = coords.into();
        if coords.is_empty() {
            return Err(Error::InvalidPoint("open book point needs x0".into()));
        }
        if !all_finite(coords.iter()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let x0 = coords[0];
        if x0 < 0.0 {
            return Err(Error::InvalidPoint(format!("negative height x0 = {x0}")));
        }
        if leaf == 0 && x0 != 0.0 {
            return Err(Error::InvalidPoint(
                "spine points (leaf 0) must have x0 = 0".into(),
            ));
        }
        let leaf = if x0 == 0.0 { 0 } else { leaf };
        Ok(Point::OpenBook(BookPoint { leaf, coords }))
    }

    pub fn kind(&self) -> PointKind {
        match self {
            Point::Euclidean(_) => PointKind::Euclidean,
            Point::Sphere(_) => PointKind::Sphere,
            Point::Spd(_) => PointKind::Spd,
            Point::OpenBook(_) => PointKind::OpenBook,
        }
    }

    /// Coordinate vector of a Euclidean or sphere point.
    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            Point::Euclidean(v) | Point::Sphere(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            Point::Spd(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_book(&self) -> Option<&BookPoint> {
        match self {
            Point::OpenBook(b) => Some(b),
            _ => None,
        }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Point::Euclidean(v) | Point::Sphere(v) => {
                let mut s = serializer.serialize_struct("Point", 2)?;
                s.serialize_field("kind", &self.kind())?;
                s.serialize_field("coords", v.as_slice())?;
                s.end()
            }
            Point::Spd(m) => {
                let rows: Vec<Vec<f64>> = m
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect();
                let mut s = serializer.serialize_struct("Point", 2)?;
                s.serialize_field("kind", &self.kind())?;
                s.serialize_field("matrix", &rows)?;
                s.end()
            }
            Point::OpenBook(b) => {
                let mut s = serializer.serialize_struct("Point", 3)?;
                s.serialize_field("kind", &self.kind())?;
                s.serialize_field("leaf", &b.leaf)?;
                s.serialize_field("coords", b.coords.as_slice())?;
                s.end()
            }
        }
    }
}

/// Whether a chart's derivatives of `h` are closed-form or finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivatives {
    Analytic,
    Numeric,
}

/// Local coordinates around a base point.
pub trait Chart {
    /// Chart dimension `s`.
    fn dim(&self) -> usize;

    fn forward(&self, p: &Point) -> Result<DVector<f64>>;

    fn inverse(&self, x: &DVector<f64>) -> Result<Point>;

    /// `h(x; q) = ρ²(φ⁻¹(x), q)`.
    fn h(&self, x: &DVector<f64>, q: &Point) -> Result<f64>;

    fn grad_h(&self, x: &DVector<f64>, q: &Point, cfg: &DiffConfig) -> Result<DVector<f64>> {
        numeric_gradient(|y| self.h(y, q), x, cfg)
    }

    fn hess_h(&self, x: &DVector<f64>, q: &Point, cfg: &DiffConfig) -> Result<DMatrix<f64>> {
        numeric_hessian(|y| self.h(y, q), x, cfg)
    }

    fn derivatives(&self) -> Derivatives {
        Derivatives::Numeric
    }
}

/// Geodesic exponential and logarithm maps with ambient tangent vectors.
pub trait ExpLog {
    fn exp(&self, base: &Point, v: &DVector<f64>) -> Result<Point>;
    fn log(&self, base: &Point, p: &Point) -> Result<DVector<f64>>;
}

/// A metric sample space.
pub trait Space: Send + Sync {
    fn kind(&self) -> PointKind;

    /// Human-readable description, e.g. `"sphere S^2 (intrinsic)"`.
    fn describe(&self) -> String;

    /// Checks that `p` belongs to this particular space (kind and dimension).
    fn validate(&self, p: &Point) -> Result<()>;

    fn distance(&self, p: &Point, q: &Point) -> Result<f64>;

    /// Chart centred on (or containing) `base`.
    fn chart_at<'a>(&'a self, base: &Point) -> Result<Box<dyn Chart + 'a>>;

    /// Default mean-finding strategy.
    fn strategy(&self) -> Strategy {
        Strategy::Newton
    }

    /// Exact sample Fréchet mean when one is available in closed form.
    fn exact_mean(&self, _sample: &[Point]) -> Option<Result<Point>> {
        None
    }

    fn geodesic(&self) -> Option<&dyn ExpLog> {
        None
    }

    /// The metric, for SPD spaces.
    fn spd_metric(&self) -> Option<crate::spaces::SpdMetric> {
        None
    }

    /// Starting point for iterative strategies. Defaults to the sample point
    /// with the smallest empirical Fréchet function.
    fn initial_guess(&self, sample: &[Point]) -> Result<Point> {
        let mut best: Option<(f64, &Point)> = None;
        for p in sample {
            let f = frechet_value(self, sample, None, p)?;
            if best.is_none_or(|(bf, _)| f < bf) {
                best = Some((f, p));
            }
        }
        best.map(|(_, p)| p.clone()).ok_or(Error::EmptySample)
    }
}

/// Ensures every point is valid for `space`.
pub fn check_sample<S: Space + ?Sized>(space: &S, sample: &[Point]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    for p in sample {
        if p.kind() != space.kind() {
            return Err(Error::MixedSpacePoints {
                expected: space.kind(),
                found: p.kind(),
            });
        }
        space.validate(p)?;
    }
    Ok(())
}

/// Empirical Fréchet function `Σ wⱼ ρ²(p, Yⱼ)`, uniform weights when `None`.
pub fn frechet_value<S: Space + ?Sized>(
    space: &S,
    sample: &[Point],
    weights: Option<&[f64]>,
    p: &Point,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(w) = weights {
        if w.len() != sample.len() {
            return Err(Error::DimensionMismatch {
                expected: sample.len(),
                found: w.len(),
            });
        }
        if w.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be nonnegative".into()));
        }
    }
    let uniform = 1.0 / sample.len() as f64;
    let mut total = 0.0;
    for (j, q) in sample.iter().enumerate() {
        if q.kind() != p.kind() {
            return Err(Error::MixedSpacePoints {
                expected: p.kind(),
                found: q.kind(),
            });
        }
        let w = weights.map_or(uniform, |w| w[j]);
        let d = space.distance(p, q)?;
        total += w * d * d;
    }
    Ok(total)
}

/// Finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    /// Base step for first derivatives, scaled by `max(1, |x_r|)`.
    pub gradient_step: f64,
    /// Base step for second derivatives, scaled the same way.
    pub hessian_step: f64,
    /// Combine steps `h` and `h/2` by Richardson extrapolation.
    pub richardson: bool,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            gradient_step: f64::EPSILON.cbrt(),
            hessian_step: f64::EPSILON.powf(0.25),
            richardson: false,
        }
    }
}

impl DiffConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gradient_step > 0.0 && self.hessian_step > 0.0) {
            return Err(Error::InvalidArgument(
                "finite-difference steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn probe<F>(f: &F, x: &DVector<f64>) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let v = f(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteValue)
    }
}

fn central_gradient<F>(f: &F, x: &DVector<f64>, base: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let mut g = DVector::zeros(x.len());
    let mut y = x.clone();
    for r in 0..x.len() {
        let h = base * x[r].abs().max(1.0);
        y[r] = x[r] + h;
        let fp = probe(f, &y)?;
        y[r] = x[r] - h;
        let fm = probe(f, &y)?;
        y[r] = x[r];
        g[r] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

fn central_hessian<F>(f: &F, x: &DVector<f64>, base: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let s = x.len();
    let steps: Vec<f64> = x.iter().map(|v| base * v.abs().max(1.0)).collect();
    let f0 = probe(f, x)?;
    let mut hess = DMatrix::zeros(s, s);
    let mut y = x.clone();
    for r in 0..s {
        let hr = steps[r];
        y[r] = x[r] + hr;
        let fp = probe(f, &y)?;
        y[r] = x[r] - hr;
        let fm = probe(f, &y)?;
        y[r] = x[r];
        hess[(r, r)] = (fp - 2.0 * f0 + fm) / (hr * hr);

        for c in (r + 1)..s {
            let hc = steps[c];
            let mut corner = |dr: f64, dc: f64| -> Result<f64> {
                y[r] = x[r] + dr;
                y[c] = x[c] + dc;
                let v = probe(f, &y);
                y[r] = x[r];
                y[c] = x[c];
                v
            };
            let fpp = corner(hr, hc)?;
            let fpm = corner(hr, -hc)?;
            let fmp = corner(-hr, hc)?;
            let fmm = corner(-hr, -hc)?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hr * hc);
            hess[(r, c)] = v;
            hess[(c, r)] = v;
        }
    }
    Ok(linalg::symmetrize(&hess))
}

/// Central-difference gradient.
pub fn numeric_gradient<F>(f: F, x: &DVector<f64>, cfg: &DiffConfig) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    cfg.validate()?;
    let coarse = central_gradient(&f, x, cfg.gradient_step)?;
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = central_gradient(&f, x, cfg.gradient_step / 2.0)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Second-order central-difference Hessian, symmetrized.
pub fn numeric_hessian<F>(f: F, x: &DVector<f64>, cfg: &DiffConfig) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    cfg.validate()?;
    let coarse = central_hessian(&f, x, cfg.hessian_step)?;
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = central_hessian(&f, x, cfg.hessian_step / 2.0)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Wraps a space so its charts always use finite differences, regardless of
/// any closed-form derivatives the inner charts provide.
#[derive(Debug, Clone)]
pub struct NumericDerivatives<S>(pub S);

struct NumericChart<'a>(Box<dyn Chart + 'a>);

impl Chart for NumericChart<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn forward(&self, p: &Point) -> Result<DVector<f64>> {
        self.0.forward(p)
    }
    fn inverse(&self, x: &DVector<f64>) -> Result<Point> {
        self.0.inverse(x)
    }
    fn h(&self, x: &DVector<f64>, q: &Point) -> Result<f64> {
        self.0.h(x, q)
    }
}

impl<S: Space> Space for NumericDerivatives<S> {
    fn kind(&self) -> PointKind {
        self.0.kind()
    }
    fn describe(&self) -> String {
        format!("{} [numeric derivatives]", self.0.describe())
    }
    fn validate(&self, p: &Point) -> Result<()> {
        self.0.validate(p)
    }
    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.0.distance(p, q)
    }
    fn chart_at<'a>(&'a self, base: &Point) -> Result<Box<dyn Chart + 'a>> {
        Ok(Box::new(NumericChart(self.0.chart_at(base)?)))
    }
    fn strategy(&self) -> Strategy {
        self.0.strategy()
    }
    fn exact_mean(&self, sample: &[Point]) -> Option<Result<Point>> {
        self.0.exact_mean(sample)
    }
    fn geodesic(&self) -> Option<&dyn ExpLog> {
        self.0.geodesic()
    }
    fn spd_metric(&self) -> Option<crate::spaces::SpdMetric> {
        self.0.spd_metric()
    }
    fn initial_guess(&self, sample: &[Point]) -> Result<Point> {
        self.0.initial_guess(sample)
    }
}
