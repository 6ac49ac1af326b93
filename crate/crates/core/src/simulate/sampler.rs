use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointKind, Space};
use crate::linalg::{self, spd_expm, symmetric_eigen, unvech};
use crate::spaces::sphere::{sphere_exp, tangent_basis};
use crate::spaces::SpdMetric;

/// Law of the height `x⁰ > 0` of an open-book point on a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Height {
    Exponential { rate: f64 },
    HalfGaussian { scale: f64 },
    Constant { value: f64 },
}

impl Height {
    pub fn mean(&self) -> f64 {
        match *self {
            Height::Exponential { rate } => 1.0 / rate,
            Height::HalfGaussian { scale } => scale * (2.0 / std::f64::consts::PI).sqrt(),
            Height::Constant { value } => value,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            Height::Exponential { rate } => 2.0 / (rate * rate),
            Height::HalfGaussian { scale } => scale * scale,
            Height::Constant { value } => value * value,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Height::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Height::HalfGaussian { scale } => scale > 0.0 && scale.is_finite(),
            Height::Constant { value } => value > 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDescriptor(format!("invalid height law {self:?}")))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Height::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            Height::HalfGaussian { scale } => {
                let z: f64 = rng.sample(StandardNormal);
                scale * z.abs()
            }
            Height::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafLaw {
    pub prob: f64,
    pub height: Height,
}

/// Distribution descriptors, one family per space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// `N(mean, cov)`; `cov` may be singular.
    EuclideanGaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    /// Uniform (surface measure) on the geodesic cap of `radius` around
    /// `center`.
    SphereCap { center: Vec<f64>, radius: f64 },
    /// `Exp_center(±angle · u)` with probability 1/2 each, `u` the unit
    /// tangent in the direction of `direction`.
    SphereTwoPoint {
        center: Vec<f64>,
        direction: Vec<f64>,
        angle: f64,
    },
    /// `expm(mean_log + Z)` with `vech(Z)` having i.i.d. `N(0, scale²)`
    /// entries.
    SpdLogNormal { mean_log: Vec<Vec<f64>>, scale: f64 },
    /// Leaf `k` with probability `leaves[k-1].prob`, the spine with
    /// `spine_prob`; spine coordinates `N(spine_mean, spine_sd² I)`.
    OpenBook {
        spine_dim: usize,
        leaves: Vec<LeafLaw>,
        #[serde(default)]
        spine_prob: f64,
        #[serde(default)]
        spine_mean: Option<Vec<f64>>,
        #[serde(default = "unit")]
        spine_sd: f64,
    },
}

fn unit() -> f64 {
    1.0
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidDescriptor("matrix must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Debug, Clone)]
enum Prepared {
    Gaussian {
        mean: DVector<f64>,
        root: DMatrix<f64>,
    },
    Cap {
        center: DVector<f64>,
        basis: DMatrix<f64>,
        radius: f64,
    },
    TwoPoint {
        center: DVector<f64>,
        tangent: DVector<f64>,
    },
    LogNormal {
        mean_log: DMatrix<f64>,
        scale: f64,
    },
    Book {
        spine_mean: DVector<f64>,
    },
}

/// Seeded i.i.d. sampler. Draws are keyed by `(seed, stream)` through a
/// ChaCha stream cipher, so replication `r` is reproducible on its own.
#[derive(Debug, Clone)]
pub struct Sampler {
    distribution: Distribution,
    seed: u64,
    prepared: Prepared,
}

impl Sampler {
    pub fn new(distribution: Distribution, seed: u64) -> Result<Self> {
        let prepared = prepare(&distribution)?;
        Ok(Self {
            distribution,
            seed,
            prepared,
        })
    }

    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> PointKind {
        match self.distribution {
            Distribution::EuclideanGaussian { .. } => PointKind::Euclidean,
            Distribution::SphereCap { .. } | Distribution::SphereTwoPoint { .. } => {
                PointKind::Sphere
            }
            Distribution::SpdLogNormal { .. } => PointKind::Spd,
            Distribution::OpenBook { .. } => PointKind::OpenBook,
        }
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// `n` points from stream 0.
    pub fn draw(&self, n: usize) -> Result<Vec<Point>> {
        self.draw_stream(0, n)
    }

    pub fn draw_stream(&self, stream: u64, n: usize) -> Result<Vec<Point>> {
        if n == 0 {
            return Err(Error::InvalidArgument("need n >= 1".into()));
        }
        let mut rng = self.rng(stream);
        (0..n).map(|_| self.draw_one(&mut rng)).collect()
    }

    fn draw_one(&self, rng: &mut ChaCha8Rng) -> Result<Point> {
        match (&self.prepared, &self.distribution) {
            (Prepared::Gaussian { mean, root }, _) => {
                let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                Point::euclidean(mean + root * z)
            }
            (Prepared::Cap { center, basis, radius }, _) => {
                let d = basis.ncols();
                let angle = cap_angle(rng, *radius, d);
                let dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let norm = dir.norm();
                let tangent = if norm > 0.0 {
                    basis * (dir * (angle / norm))
                } else {
                    DVector::zeros(center.len())
                };
                Ok(Point::Sphere(sphere_exp(center, &tangent)))
            }
            (Prepared::TwoPoint { center, tangent }, _) => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Ok(Point::Sphere(sphere_exp(center, &(tangent * sign))))
            }
            (Prepared::LogNormal { mean_log, scale }, _) => {
                let s = mean_log.nrows() * (mean_log.nrows() + 1) / 2;
                let z = DVector::from_fn(s, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
                Point::spd(spd_expm(&(mean_log + unvech(&z)?))?)
            }
            (
                Prepared::Book { spine_mean },
                Distribution::OpenBook {
                    leaves, spine_sd, ..
                },
            ) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = None;
                for (k, law) in leaves.iter().enumerate() {
                    acc += law.prob;
                    if u < acc {
                        chosen = Some((k + 1, law.height));
                        break;
                    }
                }
                let mut coords = DVector::zeros(spine_mean.len() + 1);
                let leaf = match chosen {
                    Some((k, height)) => {
                        coords[0] = height.sample(rng);
                        k
                    }
                    None => 0,
                };
                for r in 0..spine_mean.len() {
                    coords[r + 1] = spine_mean[r] + spine_sd * rng.sample::<f64, _>(StandardNormal);
                }
                Point::open_book(leaf, coords)
            }
            _ => unreachable!("prepared state matches the descriptor"),
        }
    }

    /// Population Fréchet mean, available in closed form for every
    /// descriptor (for SPD only under the log-Euclidean metric).
    pub fn population_mean<S: Space + ?Sized>(&self, space: &S) -> Result<Point> {
        if space.kind() != self.kind() {
            return Err(Error::MixedSpacePoints {
                expected: space.kind(),
                found: self.kind(),
            });
        }
        let mean = match (&self.prepared, &self.distribution) {
            (Prepared::Gaussian { mean, .. }, _) => Point::euclidean(mean.clone())?,
            (Prepared::Cap { center, .. }, _) | (Prepared::TwoPoint { center, .. }, _) => {
                Point::Sphere(center.clone())
            }
            (Prepared::LogNormal { mean_log, .. }, _) => {
                if space.spd_metric() != Some(SpdMetric::LogEuclidean) {
                    return Err(Error::InvalidDescriptor(format!(
                        "no closed-form population mean of this law under {}",
                        space.describe()
                    )));
                }
                Point::spd(spd_expm(mean_log)?)?
            }
            (Prepared::Book { spine_mean }, _) => {
                let folded = self.folded_means().expect("open book law");
                let (k, m) = folded
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &m)| {
                        if m > best.1 {
                            (i + 1, m)
                        } else {
                            best
                        }
                    });
                let mut coords = DVector::zeros(spine_mean.len() + 1);
                coords.rows_mut(1, spine_mean.len()).copy_from(spine_mean);
                if m > 0.0 {
                    coords[0] = m;
                    Point::open_book(k, coords)?
                } else {
                    Point::open_book(0, coords)?
                }
            }
        };
        space.validate(&mean)?;
        Ok(mean)
    }

    /// Population folded means `m_k = p_k E[x⁰_k] − Σ_{k'≠k} p_{k'} E[x⁰_{k'}]`.
    pub fn folded_means(&self) -> Option<Vec<f64>> {
        let Distribution::OpenBook { leaves, .. } = &self.distribution else {
            return None;
        };
        let total: f64 = leaves.iter().map(|l| l.prob * l.height.mean()).sum();
        Some(
            leaves
                .iter()
                .map(|l| 2.0 * l.prob * l.height.mean() - total)
                .collect(),
        )
    }

    /// Variance of the folded height `f_k(X)⁰` under the population law.
    pub fn folded_variance(&self, leaf: usize) -> Option<f64> {
        let Distribution::OpenBook { leaves, .. } = &self.distribution else {
            return None;
        };
        let m = *self.folded_means()?.get(leaf.checked_sub(1)?)?;
        let second: f64 = leaves.iter().map(|l| l.prob * l.height.second_moment()).sum();
        Some(second - m * m)
    }
}

/// Geodesic radius of a uniform point in a cap on `S^d`: density
/// proportional to `sin^{d-1} θ` on `[0, radius]`.
fn cap_angle(rng: &mut ChaCha8Rng, radius: f64, d: usize) -> f64 {
    if radius == 0.0 {
        return 0.0;
    }
    if d == 2 {
        let c: f64 = rng.random();
        return (1.0 - c * (1.0 - radius.cos())).clamp(-1.0, 1.0).acos();
    }
    let peak = radius.min(std::f64::consts::FRAC_PI_2).sin();
    loop {
        let theta = radius * rng.random::<f64>();
        let accept = (theta.sin() / peak).powi(d as i32 - 1);
        if rng.random::<f64>() <= accept {
            return theta;
        }
    }
}

fn prepare(distribution: &Distribution) -> Result<Prepared> {
    let bad = |m: &str| Err(Error::InvalidDescriptor(m.to_string()));
    match distribution {
        Distribution::EuclideanGaussian { mean, cov } => {
            if mean.is_empty() {
                return bad("gaussian mean must be nonempty");
            }
            let cov = matrix_from_rows(cov)?;
            if cov.nrows() != mean.len() {
                return bad("covariance size does not match mean");
            }
            linalg::check_symmetric(&cov)
                .map_err(|_| Error::InvalidDescriptor("covariance is not symmetric".into()))?;
            let eig = symmetric_eigen(&cov);
            if eig.min() < -1e-12 * eig.max().abs().max(1.0) {
                return bad("covariance is not positive semidefinite");
            }
            Ok(Prepared::Gaussian {
                mean: DVector::from_column_slice(mean),
                root: eig.map(|l| l.max(0.0).sqrt()),
            })
        }
        Distribution::SphereCap { center, radius } => {
            if !(0.0..std::f64::consts::PI).contains(radius) {
                return bad("cap radius must be in [0, π)");
            }
            let center = unit_center(center)?;
            Ok(Prepared::Cap {
                basis: tangent_basis(&center),
                center,
                radius: *radius,
            })
        }
        Distribution::SphereTwoPoint {
            center,
            direction,
            angle,
        } => {
            if !(0.0..std::f64::consts::FRAC_PI_2).contains(angle) {
                return bad("two-point angle must be in [0, π/2)");
            }
            let center = unit_center(center)?;
            if direction.len() != center.len() {
                return bad("direction has the wrong length");
            }
            let d = DVector::from_column_slice(direction);
            let t = &d - &center * center.dot(&d);
            let norm = t.norm();
            if !(norm > 1e-12) {
                return bad("direction must not be parallel to the center");
            }
            Ok(Prepared::TwoPoint {
                center,
                tangent: t * (*angle / norm),
            })
        }
        Distribution::SpdLogNormal { mean_log, scale } => {
            if !(*scale >= 0.0 && scale.is_finite()) {
                return bad("scale must be nonnegative");
            }
            let m = matrix_from_rows(mean_log)?;
            if m.nrows() == 0 {
                return bad("mean_log must be nonempty");
            }
            linalg::check_symmetric(&m)
                .map_err(|_| Error::InvalidDescriptor("mean_log is not symmetric".into()))?;
            Ok(Prepared::LogNormal {
                mean_log: m,
                scale: *scale,
            })
        }
        Distribution::OpenBook {
            spine_dim,
            leaves,
            spine_prob,
            spine_mean,
            spine_sd,
        } => {
            if leaves.len() < 2 {
                return bad("open book needs at least two leaves");
            }
            for l in leaves {
                l.height.validate()?;
                if !(l.prob >= 0.0) {
                    return bad("leaf probabilities must be nonnegative");
                }
            }
            let total: f64 = leaves.iter().map(|l| l.prob).sum::<f64>() + spine_prob;
            if !(*spine_prob >= 0.0) || (total - 1.0).abs() > 1e-9 {
                return bad("leaf and spine probabilities must sum to 1");
            }
            if !(*spine_sd >= 0.0) {
                return bad("spine_sd must be nonnegative");
            }
            let spine_mean = match spine_mean {
                Some(m) if m.len() != *spine_dim => return bad("spine_mean has the wrong length"),
                Some(m) => DVector::from_column_slice(m),
                None => DVector::zeros(*spine_dim),
            };
            Ok(Prepared::Book { spine_mean })
        }
    }
}

fn unit_center(center: &[f64]) -> Result<DVector<f64>> {
    let c = DVector::from_column_slice(center);
    let norm = c.norm();
    if center.len() < 2 || !(norm > 0.0) {
        return Err(Error::InvalidDescriptor(
            "sphere center must be a nonzero vector of length >= 2".into(),
        ));
    }
    Ok(c / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{OpenBookSpace, SphereSpace};

    fn book(probs: &[f64], height: Height) -> Distribution {
        Distribution::OpenBook {
            spine_dim: 1,
            leaves: probs.iter().map(|&prob| LeafLaw { prob, height }).collect(),
            spine_prob: 0.0,
            spine_mean: None,
            spine_sd: 1.0,
        }
    }

    #[test]
    fn degenerate_leaf_probabilities() {
        let s = Sampler::new(book(&[1.0, 0.0, 0.0], Height::Exponential { rate: 1.0 }), 3).unwrap();
        let pts = s.draw(200).unwrap();
        assert!(pts.iter().all(|p| p.as_book().unwrap().leaf() == 1));
    }

    #[test]
    fn zero_radius_cap_is_the_center() {
        let s = Sampler::new(
            Distribution::SphereCap {
                center: vec![0.0, 0.0, 1.0],
                radius: 0.0,
            },
            9,
        )
        .unwrap();
        for p in s.draw(20).unwrap() {
            assert_eq!(p, Point::Sphere(DVector::from_column_slice(&[0.0, 0.0, 1.0])));
        }
    }

    #[test]
    fn same_seed_same_points() {
        let d = Distribution::SphereCap {
            center: vec![1.0, 1.0, 0.0],
            radius: 0.7,
        };
        let a = Sampler::new(d.clone(), 42).unwrap().draw_stream(5, 50).unwrap();
        let b = Sampler::new(d, 42).unwrap().draw_stream(5, 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cap_points_stay_in_the_cap() {
        let s = Sampler::new(
            Distribution::SphereCap {
                center: vec![0.0, 1.0, 0.0, 0.0],
                radius: 0.4,
            },
            1,
        )
        .unwrap();
        let c = Point::Sphere(DVector::from_column_slice(&[0.0, 1.0, 0.0, 0.0]));
        let space = SphereSpace::intrinsic(4);
        for p in s.draw(500).unwrap() {
            assert!(space.distance(&p, &c).unwrap() <= 0.4 + 1e-12);
        }
    }

    #[test]
    fn invalid_descriptors() {
        let neg = Distribution::SphereCap {
            center: vec![0.0, 0.0, 1.0],
            radius: -0.1,
        };
        assert!(matches!(Sampler::new(neg, 0), Err(Error::InvalidDescriptor(_))));
        assert!(Sampler::new(book(&[0.5, 0.6], Height::Constant { value: 1.0 }), 0).is_err());
        assert!(Sampler::new(book(&[0.5, 0.5], Height::Constant { value: 0.0 }), 0).is_err());
    }

    #[test]
    fn open_book_population_moments() {
        let s = Sampler::new(book(&[0.6, 0.2, 0.2], Height::Constant { value: 1.0 }), 0).unwrap();
        let m = s.folded_means().unwrap();
        assert!((m[0] - 0.2).abs() < 1e-15 && (m[1] + 0.6).abs() < 1e-15);
        let mean = s.population_mean(&OpenBookSpace::new(3, 1)).unwrap();
        assert_eq!(mean.as_book().unwrap().leaf(), 1);

        let s = Sampler::new(book(&[0.5, 0.25, 0.25], Height::Exponential { rate: 1.0 }), 0).unwrap();
        assert_eq!(s.folded_means().unwrap()[0], 0.0);
        assert!((s.folded_variance(1).unwrap() - 2.0).abs() < 1e-15);
        let mean = s.population_mean(&OpenBookSpace::new(3, 1)).unwrap();
        assert!(mean.as_book().unwrap().on_spine());
    }
}
