//! Synthetic diffusion-tensor fiber datasets and the per-site two-sample
//! pipeline with multiple-testing correction.
//!
//! A dataset holds one SPD(3) tensor per (subject, site). Sites are indexed
//! along the tract and stand in for arc length.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::EstimateOptions;
use crate::geometry::Point;
use crate::inference::{bh_fdr, bonferroni, two_sample_test, TINY_P};
use crate::linalg::{spd_eigen, spd_expm, unvech, vech};
use crate::spaces::{SpdMetric, SpdSpace};

pub const CSV_HEADER: &str = "subject,group,site,a11,a12,a13,a22,a23,a33";
pub const RESULT_HEADER: &str = "site,statistic,df,p_value,tiny_p,bh_rejected,bonferroni_rejected";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subject {
    pub id: String,
    pub group: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberDataset {
    pub subjects: Vec<Subject>,
    pub sites: usize,
    /// `tensors[subject][site]`.
    pub tensors: Vec<Vec<DMatrix<f64>>>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn upper(a: &DMatrix<f64>) -> [f64; 6] {
    [a[(0, 0)], a[(0, 1)], a[(0, 2)], a[(1, 1)], a[(1, 2)], a[(2, 2)]]
}

fn from_upper(v: &[f64; 6]) -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5]])
}

impl FiberDataset {
    pub fn group_size(&self, group: u8) -> usize {
        self.subjects.iter().filter(|s| s.group == group).count()
    }

    /// CSV with header [`CSV_HEADER`], rows ordered by subject then site,
    /// values in `{:.16e}` (17 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.subjects.len() * self.sites * 160);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (subject, row) in self.subjects.iter().zip(&self.tensors) {
            for (site, a) in row.iter().enumerate() {
                write!(out, "{},{},{}", subject.id, subject.group, site).unwrap();
                for x in upper(a) {
                    write!(out, ",{x:.16e}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parses and validates a dataset: every (subject, site) pair exactly
    /// once, sites `0..S`, one group per subject and every tensor SPD.
    /// Errors carry 1-based line numbers.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
        if header.trim() != CSV_HEADER {
            return Err(parse_error(1, format!("expected header `{CSV_HEADER}`")));
        }
        let mut subjects: Vec<Subject> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut cells: Vec<HashMap<usize, DMatrix<f64>>> = Vec::new();
        let mut max_site = 0;
        for (line, raw) in lines {
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
            if fields.len() != 9 {
                return Err(parse_error(line, format!("expected 9 fields, found {}", fields.len())));
            }
            let id = fields[0];
            if id.is_empty() {
                return Err(parse_error(line, "empty subject id"));
            }
            let group: u8 = match fields[1] {
                "0" => 0,
                "1" => 1,
                g => return Err(parse_error(line, format!("group must be 0 or 1, found `{g}`"))),
            };
            let site: usize = fields[2]
                .parse()
                .map_err(|_| parse_error(line, format!("bad site index `{}`", fields[2])))?;
            let mut vals = [0.0f64; 6];
            for (v, f) in vals.iter_mut().zip(&fields[3..]) {
                *v = f
                    .parse()
                    .map_err(|_| parse_error(line, format!("bad number `{f}`")))?;
                if !v.is_finite() {
                    return Err(parse_error(line, "non-finite value"));
                }
            }
            let a = from_upper(&vals);
            spd_eigen(&a).map_err(|e| parse_error(line, e.to_string()))?;
            let s = *index.entry(id.to_string()).or_insert_with(|| {
                subjects.push(Subject {
                    id: id.to_string(),
                    group,
                });
                cells.push(HashMap::new());
                subjects.len() - 1
            });
            if subjects[s].group != group {
                return Err(parse_error(line, format!("subject `{id}` changes group")));
            }
            if cells[s].insert(site, a).is_some() {
                return Err(parse_error(line, format!("duplicate row for subject `{id}`, site {site}")));
            }
            max_site = max_site.max(site);
        }
        if subjects.is_empty() {
            return Err(parse_error(1, "no data rows"));
        }
        let sites = max_site + 1;
        let mut tensors = Vec::with_capacity(subjects.len());
        for (subject, mut row) in subjects.iter().zip(cells) {
            let mut out = Vec::with_capacity(sites);
            for site in 0..sites {
                out.push(row.remove(&site).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "subject `{}` has no row for site {site}",
                        subject.id
                    ))
                })?);
            }
            tensors.push(out);
        }
        Ok(Self {
            subjects,
            sites,
            tensors,
        })
    }
}

/// Generator settings. Group 1 carries the effect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberConfig {
    /// Subjects in groups 0 and 1.
    pub group_sizes: [usize; 2],
    pub sites: usize,
    pub effect_sites: Vec<usize>,
    /// Shift of the log-tensor mean, in units of the per-coordinate noise
    /// standard deviation.
    pub effect_size: f64,
    /// Standard deviation of each subject's tract-wide offset (log scale).
    pub subject_sd: f64,
    /// Standard deviation of the per-site noise (log scale).
    pub site_sd: f64,
    pub seed: u64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            group_sizes: [28, 18],
            sites: 75,
            effect_sites: (10..=20).collect(),
            effect_size: 2.0,
            subject_sd: 0.07,
            site_sd: 0.07,
            seed: 0,
        }
    }
}

impl FiberConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.group_sizes.contains(&0) {
            return bad("both groups need at least one subject".into());
        }
        if self.sites == 0 {
            return bad("need at least one site".into());
        }
        if let Some(s) = self.effect_sites.iter().find(|&&s| s >= self.sites) {
            return bad(format!("effect site {s} outside 0..{}", self.sites));
        }
        for (name, v) in [
            ("effect_size", self.effect_size),
            ("subject_sd", self.subject_sd),
            ("site_sd", self.site_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

fn rotation(axis: [f64; 3], angle: f64) -> DMatrix<f64> {
    let u = DVector::from_column_slice(&axis).normalize();
    let k = DMatrix::from_row_slice(3, 3, &[0.0, -u[2], u[1], u[2], 0.0, -u[0], -u[1], u[0], 0.0]);
    DMatrix::identity(3, 3) + &k * angle.sin() + &k * &k * (1.0 - angle.cos())
}

/// Population log-tensor at `site`: a prolate tensor whose principal axis
/// turns smoothly along the tract.
pub fn base_log_tensor(site: usize, sites: usize) -> DMatrix<f64> {
    let t = if sites > 1 {
        site as f64 / (sites - 1) as f64
    } else {
        0.0
    };
    let r = rotation([0.0, 0.0, 1.0], 1.2 * t) * rotation([1.0, 0.0, 0.0], 0.5 * (3.0 * t).sin());
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(&[
        1.6f64.ln(),
        0.4f64.ln(),
        0.3f64.ln(),
    ]));
    &r * d * r.transpose()
}

/// Unit direction in `vech` coordinates of the group effect: axial
/// diffusivity down, radial diffusivity up.
pub fn effect_direction() -> DVector<f64> {
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(&[-1.0, 0.5, 0.5]));
    vech(&d).normalize()
}

pub fn generate(config: &FiberConfig) -> Result<FiberDataset> {
    config.validate()?;
    let sd = (config.subject_sd.powi(2) + config.site_sd.powi(2)).sqrt();
    let shift = effect_direction() * (config.effect_size * sd);
    let base: Vec<DVector<f64>> = (0..config.sites)
        .map(|s| vech(&base_log_tensor(s, config.sites)))
        .collect();
    let mut subjects = Vec::new();
    let mut tensors = Vec::new();
    for group in 0..2u8 {
        for i in 0..config.group_sizes[group as usize] {
            let stream = subjects.len() as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream);
            let mut normal = || rng.sample::<f64, _>(StandardNormal);
            let offset = DVector::from_fn(6, |_, _| config.subject_sd * normal());
            let mut row = Vec::with_capacity(config.sites);
            for (site, b) in base.iter().enumerate() {
                let mut x = b + &offset + DVector::from_fn(6, |_, _| config.site_sd * normal());
                if group == 1 && config.effect_sites.contains(&site) {
                    x += &shift;
                }
                row.push(spd_expm(&unvech(&x)?)?);
            }
            subjects.push(Subject {
                id: format!("g{group}s{i:02}"),
                group,
            });
            tensors.push(row);
        }
    }
    Ok(FiberDataset {
        subjects,
        sites: config.sites,
        tensors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteTestResult {
    pub site: usize,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// `p < 1e-5`: below the range where the chi-square approximation is
    /// trustworthy.
    pub tiny_p: bool,
    pub bh_rejected: bool,
    pub bonferroni_rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedSite {
    pub site: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberReport {
    pub metric: &'static str,
    pub alpha: f64,
    pub sites: Vec<SiteTestResult>,
    pub bonferroni_global_p: Option<f64>,
    pub bonferroni_rejections: usize,
    pub bh_rejections: usize,
    pub failed_sites: Vec<FailedSite>,
}

impl FiberReport {
    /// Per-site CSV with header [`RESULT_HEADER`], one row per site in site
    /// order. Failed sites have `NaN` statistic and p-value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RESULT_HEADER);
        out.push('\n');
        for r in &self.sites {
            writeln!(
                out,
                "{},{:.16e},{},{:.16e},{},{},{}",
                r.site, r.statistic, r.df, r.p_value, r.tiny_p, r.bh_rejected, r.bonferroni_rejected
            )
            .unwrap();
        }
        out
    }
}

fn metric_name(metric: SpdMetric) -> &'static str {
    match metric {
        SpdMetric::Euclidean => "euclidean",
        SpdMetric::LogEuclidean => "log-euclidean",
    }
}

/// Runs the two-sample test at every site (group 0 against group 1), then
/// Bonferroni and Benjamini–Hochberg over the sites that succeeded.
pub fn run_fiber(
    data: &FiberDataset,
    metric: SpdMetric,
    alpha: f64,
    opts: &EstimateOptions,
) -> Result<FiberReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0,1), got {alpha}")));
    }
    if data.group_size(0) == 0 || data.group_size(1) == 0 {
        return Err(Error::InvalidArgument("both groups must be nonempty".into()));
    }
    let space = SpdSpace::new(3, metric);
    let dof = space.chart_dim();
    let tests: Vec<Result<(f64, f64)>> = (0..data.sites)
        .into_par_iter()
        .map(|site| {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (subject, row) in data.subjects.iter().zip(&data.tensors) {
                let p = Point::Spd(row[site].clone());
                if subject.group == 0 {
                    x.push(p);
                } else {
                    y.push(p);
                }
            }
            let t = two_sample_test(&space, &x, &y, opts)?;
            Ok((t.statistic, t.p_value))
        })
        .collect();

    let ok: Vec<(usize, f64)> = tests
        .iter()
        .enumerate()
        .filter_map(|(s, t)| t.as_ref().ok().map(|&(_, p)| (s, p)))
        .collect();
    let pvalues: Vec<f64> = ok.iter().map(|&(_, p)| p).collect();
    let mut bh = vec![false; data.sites];
    let mut bonf = vec![false; data.sites];
    let mut global_p = None;
    if !pvalues.is_empty() {
        let b = bh_fdr(&pvalues, alpha)?;
        let f = bonferroni(&pvalues, alpha)?;
        for (i, &(site, _)) in ok.iter().enumerate() {
            bh[site] = b.rejected[i];
            bonf[site] = f.rejected[i];
        }
        global_p = f.global_p;
    }

    let mut sites = Vec::with_capacity(data.sites);
    let mut failed_sites = Vec::new();
    for (site, t) in tests.into_iter().enumerate() {
        let (statistic, p_value) = match t {
            Ok(v) => v,
            Err(e) => {
                failed_sites.push(FailedSite {
                    site,
                    error: e.to_string(),
                });
                (f64::NAN, f64::NAN)
            }
        };
        sites.push(SiteTestResult {
            site,
            statistic,
            df: dof,
            p_value,
            tiny_p: p_value < TINY_P,
            bh_rejected: bh[site],
            bonferroni_rejected: bonf[site],
        });
    }
    Ok(FiberReport {
        metric: metric_name(metric),
        alpha,
        bonferroni_global_p: global_p,
        bonferroni_rejections: bonf.iter().filter(|&&r| r).count(),
        bh_rejections: bh.iter().filter(|&&r| r).count(),
        sites,
        failed_sites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FiberConfig {
        FiberConfig {
            group_sizes: [6, 5],
            sites: 4,
            effect_sites: vec![1],
            seed: 7,
            ..FiberConfig::default()
        }
    }

    #[test]
    fn defaults_have_the_expected_shape() {
        let d = generate(&FiberConfig::default()).unwrap();
        assert_eq!(d.subjects.len(), 46);
        assert_eq!(d.group_size(0), 28);
        assert_eq!(d.group_size(1), 18);
        assert_eq!(d.sites, 75);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = generate(&small()).unwrap();
        let text = d.to_csv();
        let back = FiberDataset::from_csv(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn generation_is_reproducible() {
        assert_eq!(generate(&small()).unwrap().to_csv(), generate(&small()).unwrap().to_csv());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let d = generate(&small()).unwrap();
        let mut lines: Vec<String> = d.to_csv().lines().map(String::from).collect();
        lines[3] = lines[3].replacen(",", ",x", 2);
        let err = FiberDataset::from_csv(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");

        let mut lines: Vec<String> = d.to_csv().lines().map(String::from).collect();
        lines.push(lines[2].clone());
        let err = FiberDataset::from_csv(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");

        let bad = format!("{CSV_HEADER}\na,0,0,1,2,0,1,0,1\n");
        assert!(matches!(FiberDataset::from_csv(&bad), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn relabeled_duplicates_give_zero_statistics() {
        let mut d = generate(&FiberConfig {
            group_sizes: [10, 1],
            sites: 3,
            effect_sites: vec![],
            seed: 1,
            ..FiberConfig::default()
        })
        .unwrap();
        d.subjects.truncate(10);
        d.tensors.truncate(10);
        let n = d.subjects.len();
        for i in 0..n {
            d.subjects.push(Subject {
                id: format!("copy{i}"),
                group: 1,
            });
            d.tensors.push(d.tensors[i].clone());
        }
        for metric in [SpdMetric::Euclidean, SpdMetric::LogEuclidean] {
            let r = run_fiber(&d, metric, 0.05, &EstimateOptions::default()).unwrap();
            for s in &r.sites {
                assert_eq!(s.df, 6);
                assert!(s.statistic.abs() < 1e-20, "{}", s.statistic);
                assert!((s.p_value - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn effect_direction_is_unit_and_trace_free() {
        let u = effect_direction();
        assert!((u.norm() - 1.0).abs() < 1e-15);
        assert!((u[0] + u[1] + u[2]).abs() < 1e-15);
    }
}
