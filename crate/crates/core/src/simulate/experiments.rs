use rayon::prelude::*;
use serde::Serialize;

use super::Sampler;
use crate::error::{Error, Result};
use crate::estimator::{confidence_region_contains, estimate_mean, fit, EstimateOptions};
use crate::geometry::Space;
use crate::inference::{ks_test, normal_cdf, two_sample_test, KsResult};
use crate::spaces::{openbook_frechet_mean, OpenBookSpace};

/// Largest tolerated fraction of failed replications.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Coverage,
    Stickiness,
    Type1,
    Consistency,
}

/// Result of a single replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Covered(bool),
    Rejected(bool),
    /// Stratum of the sample mean (0 = spine) and its height `x⁰`.
    Located { leaf: usize, height: f64 },
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub experiment: Experiment,
    pub reps: usize,
    pub failures: usize,
    /// Fraction of successful replications with a positive outcome.
    pub estimate: f64,
    /// `sqrt(p̂(1 − p̂)/R)` over the successful replications.
    pub std_error: f64,
    /// Degrees of freedom of the underlying chi-square reference.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof: Option<usize>,
    /// Stickiness only: fraction per stratum, index 0 the spine.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratum_fractions: Option<Vec<f64>>,
    #[serde(skip)]
    pub outcomes: Vec<Outcome>,
}

impl McReport {
    fn new(experiment: Experiment, outcomes: Vec<Outcome>, hit: impl Fn(&Outcome) -> bool) -> Self {
        let reps = outcomes.len();
        let failures = outcomes.iter().filter(|o| **o == Outcome::Failed).count();
        let done = reps - failures;
        let hits = outcomes.iter().filter(|o| hit(o)).count();
        let estimate = if done == 0 { f64::NAN } else { hits as f64 / done as f64 };
        Self {
            experiment,
            reps,
            failures,
            estimate,
            std_error: (estimate * (1.0 - estimate) / done as f64).sqrt(),
            dof: None,
            stratum_fractions: None,
            outcomes,
        }
    }
}

/// Counts failed replications, erroring out when they exceed
/// [`MAX_FAILURE_RATE`].
fn settle(results: Vec<Result<Outcome>>) -> Result<Vec<Outcome>> {
    let reps = results.len();
    let failures = results.iter().filter(|r| r.is_err()).count();
    if failures as f64 > MAX_FAILURE_RATE * reps as f64 {
        let last = results
            .iter()
            .rev()
            .find_map(|r| r.as_ref().err())
            .map(|e| e.to_string())
            .unwrap_or_default();
        return Err(Error::TooManyFailures {
            failures,
            reps,
            last,
        });
    }
    Ok(results
        .into_iter()
        .map(|r| r.unwrap_or(Outcome::Failed))
        .collect())
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        Err(Error::InvalidArgument("need reps >= 1".into()))
    } else {
        Ok(())
    }
}

/// Empirical coverage of the `(1 − α)` CLT confidence region for the
/// population mean.
pub fn mc_coverage<S: Space + ?Sized>(
    space: &S,
    sampler: &Sampler,
    n: usize,
    reps: usize,
    alpha: f64,
    opts: &EstimateOptions,
) -> Result<McReport> {
    check_reps(reps)?;
    let truth = sampler.population_mean(space)?;
    let results: Vec<Result<Outcome>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let sample = sampler.draw_stream(r as u64, n)?;
            let f = fit(space, &sample, opts)?;
            let chart = space.chart_at(&f.mean)?;
            let covered = match chart.forward(&truth) {
                Ok(x) => confidence_region_contains(&f, &x, alpha)?,
                Err(Error::OutsideChart(_)) => false,
                Err(e) => return Err(e),
            };
            Ok(Outcome::Covered(covered))
        })
        .collect();
    let mut report = McReport::new(Experiment::Coverage, settle(results)?, |o| {
        *o == Outcome::Covered(true)
    });
    report.dof = Some(space.chart_at(&truth)?.dim());
    Ok(report)
}

/// Classifies the exact open-book sample mean in every replication. The
/// estimate is the fraction landing in the stratum of the population mean.
pub fn mc_stickiness(
    space: &OpenBookSpace,
    sampler: &Sampler,
    n: usize,
    reps: usize,
) -> Result<McReport> {
    check_reps(reps)?;
    let truth = sampler.population_mean(space)?;
    let target = truth.as_book().expect("open book").leaf();
    let results: Vec<Result<Outcome>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let sample = sampler.draw_stream(r as u64, n)?;
            let mean = openbook_frechet_mean(space, &sample)?;
            let b = mean.as_book().expect("open book");
            Ok(Outcome::Located {
                leaf: b.leaf(),
                height: b.height(),
            })
        })
        .collect();
    let outcomes = settle(results)?;
    let mut counts = vec![0usize; space.leaves() + 1];
    for o in &outcomes {
        if let Outcome::Located { leaf, .. } = o {
            counts[*leaf] += 1;
        }
    }
    let mut report = McReport::new(Experiment::Stickiness, outcomes, |o| {
        matches!(o, Outcome::Located { leaf, .. } if *leaf == target)
    });
    let done = (report.reps - report.failures) as f64;
    report.stratum_fractions = Some(counts.iter().map(|&c| c as f64 / done).collect());
    Ok(report)
}

/// Empirical rejection rate of the two-sample test when both groups come
/// from `sampler`. With `shared_stream` both groups are drawn from the same
/// random stream, which for `n1 == n2` makes them identical.
#[allow(clippy::too_many_arguments)]
pub fn mc_type1<S: Space + ?Sized>(
    space: &S,
    sampler: &Sampler,
    n1: usize,
    n2: usize,
    reps: usize,
    alpha: f64,
    shared_stream: bool,
    opts: &EstimateOptions,
) -> Result<McReport> {
    check_reps(reps)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0,1), got {alpha}")));
    }
    let results: Vec<Result<(Outcome, usize)>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let r = r as u64;
            let x = sampler.draw_stream(2 * r, n1)?;
            let y_stream = if shared_stream { 2 * r } else { 2 * r + 1 };
            let y = sampler.draw_stream(y_stream, n2)?;
            let t = two_sample_test(space, &x, &y, opts)?;
            Ok((Outcome::Rejected(t.p_value <= alpha), t.dof))
        })
        .collect();
    let dof = results.iter().find_map(|r| r.as_ref().ok().map(|(_, d)| *d));
    let outcomes = settle(results.into_iter().map(|r| r.map(|(o, _)| o)).collect())?;
    let mut report = McReport::new(Experiment::Type1, outcomes, |o| *o == Outcome::Rejected(true));
    report.dof = dof;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub n: usize,
    /// Median over replications of `ρ(μₙ, μ)`.
    pub median_error: f64,
    pub failures: usize,
}

/// Median distance from the sample mean to the population mean for each
/// sample size in `n_grid`.
pub fn mc_consistency<S: Space + ?Sized>(
    space: &S,
    sampler: &Sampler,
    n_grid: &[usize],
    reps: usize,
    opts: &EstimateOptions,
) -> Result<Vec<ConsistencyRow>> {
    check_reps(reps)?;
    let truth = sampler.population_mean(space)?;
    n_grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let results: Vec<Result<f64>> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let sample = sampler.draw_stream(((g as u64) << 32) | r as u64, n)?;
                    let mean = estimate_mean(space, &sample, opts)?.mean;
                    space.distance(&mean, &truth)
                })
                .collect();
            let failures = results.iter().filter(|r| r.is_err()).count();
            if failures as f64 > MAX_FAILURE_RATE * reps as f64 {
                let last = results
                    .iter()
                    .find_map(|r| r.as_ref().err())
                    .map(|e| e.to_string())
                    .unwrap_or_default();
                return Err(Error::TooManyFailures {
                    failures,
                    reps,
                    last,
                });
            }
            let mut errors: Vec<f64> = results.into_iter().filter_map(|r| r.ok()).collect();
            errors.sort_by(f64::total_cmp);
            Ok(ConsistencyRow {
                n,
                median_error: median_sorted(&errors),
                failures,
            })
        })
        .collect()
}

fn median_sorted(xs: &[f64]) -> f64 {
    let m = xs.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

/// Kolmogorov–Smirnov test of the values `√n · x⁰(μₙ)` from the
/// replications that landed on `leaf` against the half-normal law whose
/// variance is that of the population folded height `f_leaf(X)⁰`.
pub fn boundary_law_test(
    report: &McReport,
    sampler: &Sampler,
    n: usize,
    leaf: usize,
) -> Result<KsResult> {
    let variance = sampler
        .folded_variance(leaf)
        .ok_or_else(|| Error::InvalidArgument("sampler is not an open-book law".into()))?;
    let sd = variance.sqrt();
    let scale = (n as f64).sqrt();
    let values: Vec<f64> = report
        .outcomes
        .iter()
        .filter_map(|o| match o {
            Outcome::Located { leaf: l, height } if *l == leaf => Some(scale * height),
            _ => None,
        })
        .collect();
    if values.is_empty() {
        return Err(Error::InsufficientSample {
            required: 1,
            found: 0,
        });
    }
    Ok(ks_test(&values, |x| {
        if x <= 0.0 {
            0.0
        } else {
            2.0 * normal_cdf(x / sd) - 1.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{Distribution, Height, LeafLaw};
    use crate::spaces::EuclideanSpace;

    fn gaussian(dim: usize) -> Distribution {
        Distribution::EuclideanGaussian {
            mean: vec![0.5; dim],
            cov: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.2 }).collect())
                .collect(),
        }
    }

    #[test]
    fn standard_error_formula() {
        let outcomes = vec![
            Outcome::Covered(true),
            Outcome::Covered(false),
            Outcome::Covered(true),
            Outcome::Covered(true),
        ];
        let r = McReport::new(Experiment::Coverage, outcomes, |o| *o == Outcome::Covered(true));
        assert_eq!(r.estimate, 0.75);
        assert!((r.std_error - (0.75f64 * 0.25 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn failure_policy() {
        let mut results: Vec<Result<Outcome>> = vec![Ok(Outcome::Covered(true)); 199];
        results.push(Err(Error::CutLocus));
        let outcomes = settle(results).unwrap();
        assert_eq!(outcomes.iter().filter(|o| **o == Outcome::Failed).count(), 1);

        let mut results: Vec<Result<Outcome>> = vec![Ok(Outcome::Covered(true)); 98];
        results.push(Err(Error::CutLocus));
        results.push(Err(Error::CutLocus));
        assert!(matches!(settle(results), Err(Error::TooManyFailures { failures: 2, .. })));
    }

    #[test]
    fn half_alpha_coverage_is_near_half() {
        let space = EuclideanSpace::new(2);
        let s = Sampler::new(gaussian(2), 11).unwrap();
        let r = mc_coverage(&space, &s, 100, 400, 0.5, &EstimateOptions::default()).unwrap();
        assert!((r.estimate - 0.5).abs() < 3.0 * 0.025 + 0.02, "{}", r.estimate);
    }

    #[test]
    fn shared_stream_never_rejects() {
        let space = EuclideanSpace::new(2);
        let s = Sampler::new(gaussian(2), 5).unwrap();
        let r = mc_type1(&space, &s, 30, 30, 50, 0.05, true, &EstimateOptions::default()).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.dof, Some(2));
    }

    #[test]
    fn point_mass_has_zero_error() {
        let space = EuclideanSpace::new(2);
        let d = Distribution::EuclideanGaussian {
            mean: vec![1.0, -2.0],
            cov: vec![vec![0.0; 2]; 2],
        };
        let s = Sampler::new(d, 0).unwrap();
        let rows = mc_consistency(&space, &s, &[5, 50], 10, &EstimateOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.median_error == 0.0));
    }

    #[test]
    fn reports_are_reproducible() {
        let d = Distribution::OpenBook {
            spine_dim: 1,
            leaves: vec![
                LeafLaw {
                    prob: 0.5,
                    height: Height::Exponential { rate: 1.0 },
                },
                LeafLaw {
                    prob: 0.5,
                    height: Height::HalfGaussian { scale: 1.0 },
                },
            ],
            spine_prob: 0.0,
            spine_mean: None,
            spine_sd: 1.0,
        };
        let space = OpenBookSpace::new(2, 1);
        let a = mc_stickiness(&space, &Sampler::new(d.clone(), 3).unwrap(), 50, 40).unwrap();
        let b = mc_stickiness(&space, &Sampler::new(d, 3).unwrap(), 50, 40).unwrap();
        assert_eq!(a, b);
    }
}
