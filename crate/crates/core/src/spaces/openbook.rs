//! The open book: `K` half-spaces `R^D × [0, ∞)` (leaves) glued along their
//! common boundary `R^D` (the spine).
//!
//! Sample Fréchet means are exact. The squared distance splits into a
//! height term and a spine term, so the spine coordinates of the mean are the
//! ordinary mean, and the height and leaf follow from the folded moments
//! `m_k`: the mean sits on leaf `k` at height `m_k` when `m_k > 0`, and on
//! the spine otherwise.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::Strategy;
use crate::geometry::{BookPoint, Chart, Point, PointKind, Space};

use super::euclidean::QuadraticChart;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpenBookSpace {
    leaves: usize,
    spine_dim: usize,
}

impl OpenBookSpace {
    pub fn new(leaves: usize, spine_dim: usize) -> Self {
        assert!(leaves >= 2, "open book needs at least two leaves");
        Self { leaves, spine_dim }
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn spine_dim(&self) -> usize {
        self.spine_dim
    }
}

fn book_of(p: &Point) -> Result<&BookPoint> {
    p.as_book().ok_or(Error::MixedSpacePoints {
        expected: PointKind::OpenBook,
        found: p.kind(),
    })
}

/// Distance between two open-book points: Euclidean within a closed leaf,
/// `√((x⁰ + y⁰)² + ‖x_spine − y_spine‖²)` across leaves.
pub fn openbook_distance(a: &BookPoint, b: &BookPoint) -> f64 {
    let (x, y) = (a.coords(), b.coords());
    let same_side = a.leaf() == b.leaf() || a.on_spine() || b.on_spine();
    let dh = if same_side {
        x[0] - y[0]
    } else {
        x[0] + y[0]
    };
    let mut s = dh * dh;
    for r in 1..x.len() {
        let d = x[r] - y[r];
        s += d * d;
    }
    s.sqrt()
}

/// Folding map `f_k`: identity on leaf `k` and the spine, reflection of the
/// height coordinate on every other leaf.
pub fn openbook_fold(k: usize, p: &BookPoint) -> DVector<f64> {
    let mut z = p.coords().clone();
    if !p.on_spine() && p.leaf() != k {
        z[0] = -z[0];
    }
    z
}

/// Empirical leaf weights and folded moments of a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpenBookMoments {
    /// `w_k`, fraction of the sample on leaf `k` (index `k - 1`).
    pub weights: Vec<f64>,
    pub spine_weight: f64,
    /// `m_k`, mean height after folding onto leaf `k` (index `k - 1`).
    pub folded_means: Vec<f64>,
    /// Mean of the spine coordinates over the whole sample.
    pub spine_mean: Vec<f64>,
    pub n: usize,
}

impl OpenBookMoments {
    pub fn max_folded(&self) -> (usize, f64) {
        let mut best = (1, f64::NEG_INFINITY);
        for (i, &m) in self.folded_means.iter().enumerate() {
            if m > best.1 {
                best = (i + 1, m);
            }
        }
        best
    }
}

/// Where the Fréchet mean sits, read off the folded moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stickiness {
    /// `m_k > 0`: sticky on leaf `k`.
    Leaf(usize),
    /// All `m_k < 0`: sticky on the spine.
    Spine,
    /// `max m_k = 0` exactly.
    Boundary(usize),
}

pub fn openbook_moments(space: &OpenBookSpace, sample: &[Point]) -> Result<OpenBookMoments> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let k = space.leaves;
    let mut counts = vec![0usize; k + 1];
    let mut height_by_leaf = vec![0.0; k + 1];
    let mut total_height = 0.0;
    let mut spine_sum = DVector::zeros(space.spine_dim);
    for p in sample {
        space.validate(p)?;
        let b = book_of(p)?;
        counts[b.leaf()] += 1;
        height_by_leaf[b.leaf()] += b.height();
        total_height += b.height();
        spine_sum += b.spine_coords();
    }
    let n = sample.len() as f64;
    // Σ_j f_k(Y_j)⁰ = (height on leaf k) − (height on the other leaves).
    let folded_means = (1..=k)
        .map(|leaf| (2.0 * height_by_leaf[leaf] - total_height) / n)
        .collect();
    Ok(OpenBookMoments {
        weights: (1..=k).map(|leaf| counts[leaf] as f64 / n).collect(),
        spine_weight: counts[0] as f64 / n,
        folded_means,
        spine_mean: (spine_sum / n).iter().copied().collect(),
        n: sample.len(),
    })
}

pub fn openbook_classify(mom: &OpenBookMoments) -> Stickiness {
    let (k, m) = mom.max_folded();
    if m > 0.0 {
        Stickiness::Leaf(k)
    } else if m < 0.0 {
        Stickiness::Spine
    } else {
        Stickiness::Boundary(k)
    }
}

/// Exact sample Fréchet mean.
pub fn openbook_frechet_mean(space: &OpenBookSpace, sample: &[Point]) -> Result<Point> {
    let mom = openbook_moments(space, sample)?;
    let spine = DVector::from_vec(mom.spine_mean.clone());
    let (leaf, height) = match openbook_classify(&mom) {
        Stickiness::Leaf(k) => (k, mom.folded_means[k - 1]),
        Stickiness::Spine | Stickiness::Boundary(_) => (0, 0.0),
    };
    let mut coords = DVector::zeros(space.spine_dim + 1);
    coords[0] = height;
    coords.rows_mut(1, space.spine_dim).copy_from(&spine);
    Point::open_book(leaf, coords)
}

fn leaf_chart_target(leaf: usize) -> impl Fn(&Point) -> Result<DVector<f64>> {
    move |p: &Point| Ok(openbook_fold(leaf, book_of(p)?))
}

impl Space for OpenBookSpace {
    fn kind(&self) -> PointKind {
        PointKind::OpenBook
    }

    fn describe(&self) -> String {
        format!("open book (K={}, D={})", self.leaves, self.spine_dim)
    }

    fn validate(&self, p: &Point) -> Result<()> {
        let b = book_of(p)?;
        if b.coords().len() != self.spine_dim + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.spine_dim + 1,
                found: b.coords().len(),
            });
        }
        if b.leaf() > self.leaves {
            return Err(Error::InvalidPoint(format!(
                "leaf {} exceeds leaf count {}",
                b.leaf(),
                self.leaves
            )));
        }
        Ok(())
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        Ok(openbook_distance(book_of(p)?, book_of(q)?))
    }

    /// On a leaf the chart is the folding map (dimension `D + 1`); on the
    /// spine it is the spine coordinates (dimension `D`).
    fn chart_at<'a>(&'a self, base: &Point) -> Result<Box<dyn Chart + 'a>> {
        let b = book_of(base)?;
        if b.on_spine() {
            let d = self.spine_dim;
            return Ok(Box::new(SpineChart { dim: d }));
        }
        let leaf = b.leaf();
        Ok(Box::new(QuadraticChart {
            dim: self.spine_dim + 1,
            target: leaf_chart_target(leaf),
            inverse: Box::new(move |x: &DVector<f64>| {
                if x[0] < 0.0 {
                    return Err(Error::OutsideChart(format!(
                        "negative height {} in the leaf-{leaf} chart",
                        x[0]
                    )));
                }
                Point::open_book(leaf, x.clone())
            }),
        }))
    }

    fn strategy(&self) -> Strategy {
        Strategy::OpenBookExact
    }

    fn exact_mean(&self, sample: &[Point]) -> Option<Result<Point>> {
        Some(openbook_frechet_mean(self, sample))
    }

    fn initial_guess(&self, sample: &[Point]) -> Result<Point> {
        openbook_frechet_mean(self, sample)
    }
}

/// Spine chart: `h(x; q) = (q⁰)² + ‖x − q_spine‖²`.
struct SpineChart {
    dim: usize,
}

impl Chart for SpineChart {
    fn dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, p: &Point) -> Result<DVector<f64>> {
        let b = book_of(p)?;
        if !b.on_spine() {
            return Err(Error::OutsideChart(format!(
                "point on leaf {} is not on the spine",
                b.leaf()
            )));
        }
        Ok(b.spine_coords())
    }

    fn inverse(&self, x: &DVector<f64>) -> Result<Point> {
        let mut coords = DVector::zeros(self.dim + 1);
        coords.rows_mut(1, self.dim).copy_from(x);
        Point::open_book(0, coords)
    }

    fn h(&self, x: &DVector<f64>, q: &Point) -> Result<f64> {
        let b = book_of(q)?;
        Ok(b.height().powi(2) + (x - b.spine_coords()).norm_squared())
    }

    fn grad_h(
        &self,
        x: &DVector<f64>,
        q: &Point,
        _: &crate::geometry::DiffConfig,
    ) -> Result<DVector<f64>> {
        Ok((x - book_of(q)?.spine_coords()) * 2.0)
    }

    fn hess_h(
        &self,
        _: &DVector<f64>,
        _: &Point,
        _: &crate::geometry::DiffConfig,
    ) -> Result<nalgebra::DMatrix<f64>> {
        Ok(nalgebra::DMatrix::identity(self.dim, self.dim) * 2.0)
    }

    fn derivatives(&self) -> crate::geometry::Derivatives {
        crate::geometry::Derivatives::Analytic
    }
}
