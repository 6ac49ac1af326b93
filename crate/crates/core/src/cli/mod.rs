//! The `frechet` command-line tool.
//!
//! Exit codes: 0 success, 2 input error, 3 no convergence, 4 numerical
//! failure (including partial failure of a batch).

pub mod io;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{fit, EstimateOptions, FrechetFit};
use crate::fiber::{generate, run_fiber, FiberConfig, FiberDataset};
use crate::geometry::{NumericDerivatives, Space};
use crate::inference::{two_sample_test, TwoSampleResult};
use crate::simulate::{
    mc_consistency, mc_coverage, mc_stickiness, mc_type1, ConsistencyRow, Distribution, McReport,
    Sampler,
};
use crate::spaces::{EuclideanSpace, OpenBookSpace, SpdMetric, SpdSpace, SphereSpace};
use io::{read_points, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. } => EXIT_CONVERGENCE,
        Error::EmptySample
        | Error::MixedSpacePoints { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidPoint(_)
        | Error::NotPositiveDefinite { .. }
        | Error::NotSymmetric { .. }
        | Error::InsufficientSample { .. }
        | Error::InvalidDescriptor(_)
        | Error::InvalidArgument(_)
        | Error::Parse { .. } => EXIT_INPUT,
        Error::NonFiniteValue
        | Error::NearSingularHessian { .. }
        | Error::NearSingularCovariance { .. }
        | Error::CutLocus
        | Error::NonUniqueProjection
        | Error::OutsideChart(_)
        | Error::TooManyFailures { .. } => EXIT_NUMERIC,
    }
}

#[derive(Debug, Parser)]
#[command(name = "frechet", version, about = "Fréchet means, CLT confidence regions and two-sample tests on non-Euclidean data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceArg {
    Euclidean,
    Sphere,
    Spd,
    Openbook,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Intrinsic,
    Extrinsic,
    Euclidean,
    LogEuclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FiberMetric {
    Euclidean,
    LogEuclidean,
}

impl From<FiberMetric> for SpdMetric {
    fn from(m: FiberMetric) -> Self {
        match m {
            FiberMetric::Euclidean => SpdMetric::Euclidean,
            FiberMetric::LogEuclidean => SpdMetric::LogEuclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentArg {
    Coverage,
    Stickiness,
    Type1,
    Consistency,
}

#[derive(Debug, clap::Args)]
struct SpaceArgs {
    /// Sample space of the input points.
    #[arg(long, value_enum)]
    space: SpaceArg,
    /// Metric: intrinsic|extrinsic for the sphere (default intrinsic),
    /// euclidean|log-euclidean for SPD (default log-euclidean).
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Number of open-book leaves (default: largest leaf index in the data,
    /// at least 2).
    #[arg(long)]
    leaves: Option<usize>,
    /// Use finite-difference derivatives even where analytic ones exist.
    #[arg(long)]
    numeric: bool,
    /// Iteration limit for Karcher and Newton updates.
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
}

impl SpaceArgs {
    fn options(&self) -> EstimateOptions {
        EstimateOptions {
            max_iterations: self.max_iterations,
            ..EstimateOptions::default()
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample Fréchet mean with its sandwich covariance.
    Mean {
        input: PathBuf,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Two-sample chi-square test of equal Fréchet means.
    Test2 {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-site tests on a fiber dataset with Bonferroni and BH corrections.
    Fiber {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "log-euclidean")]
        metric: FiberMetric,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Per-site CSV (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Summary JSON (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Monte Carlo experiment described by a JSON file.
    Simulate {
        #[arg(long, value_enum)]
        experiment: ExperimentArg,
        descriptor: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Writes a synthetic fiber dataset.
    GenFiber {
        /// Subjects in groups 0 and 1.
        #[arg(long, value_delimiter = ',', default_values_t = [28, 18])]
        group_sizes: Vec<usize>,
        #[arg(long, default_value_t = 75)]
        sites: usize,
        /// Inclusive range `a-b` or a comma-separated list.
        #[arg(long, default_value = "10-20")]
        effect_sites: String,
        #[arg(long, default_value_t = 2.0)]
        effect_size: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn maybe_numeric<S: Space + 'static>(space: S, numeric: bool) -> Box<dyn Space> {
    if numeric {
        Box::new(NumericDerivatives(space))
    } else {
        Box::new(space)
    }
}

fn format_of(space: SpaceArg) -> Format {
    match space {
        SpaceArg::Euclidean => Format::Vector,
        SpaceArg::Sphere => Format::Sphere,
        SpaceArg::Spd => Format::Spd,
        SpaceArg::Openbook => Format::OpenBook,
    }
}

/// Builds the space described by the flags, sized from the data.
fn build_space(args: &SpaceArgs, data: &[&[crate::geometry::Point]]) -> Result<Box<dyn Space>> {
    let first = data
        .iter()
        .find_map(|d| d.first())
        .ok_or(Error::EmptySample)?;
    let bad_metric = |m: MetricArg| {
        Err(Error::InvalidArgument(format!(
            "metric {m:?} does not apply to {:?}",
            args.space
        )))
    };
    let space: Box<dyn Space> = match args.space {
        SpaceArg::Euclidean => {
            if let Some(m) = args.metric.filter(|&m| m != MetricArg::Euclidean) {
                return bad_metric(m);
            }
            let dim = first.as_vector().map_or(0, |v| v.len());
            maybe_numeric(EuclideanSpace::new(dim), args.numeric)
        }
        SpaceArg::Sphere => {
            let ambient = first.as_vector().map_or(0, |v| v.len());
            let s = match args.metric.unwrap_or(MetricArg::Intrinsic) {
                MetricArg::Intrinsic => SphereSpace::intrinsic(ambient),
                MetricArg::Extrinsic => SphereSpace::extrinsic(ambient),
                m => return bad_metric(m),
            };
            maybe_numeric(s, args.numeric)
        }
        SpaceArg::Spd => {
            let size = first.as_matrix().map_or(0, |m| m.nrows());
            let s = match args.metric.unwrap_or(MetricArg::LogEuclidean) {
                MetricArg::Euclidean => SpdSpace::euclidean(size),
                MetricArg::LogEuclidean => SpdSpace::log_euclidean(size),
                m => return bad_metric(m),
            };
            maybe_numeric(s, args.numeric)
        }
        SpaceArg::Openbook => {
            if let Some(m) = args.metric {
                return bad_metric(m);
            }
            let spine_dim = first.as_book().map_or(0, |b| b.spine_coords().len());
            let seen = data
                .iter()
                .flat_map(|d| d.iter())
                .filter_map(|p| p.as_book().map(|b| b.leaf()))
                .max()
                .unwrap_or(0);
            let leaves = args.leaves.unwrap_or(seen.max(2));
            if leaves < 2 {
                return Err(Error::InvalidArgument("open book needs at least 2 leaves".into()));
            }
            maybe_numeric(OpenBookSpace::new(leaves, spine_dim), args.numeric)
        }
    };
    Ok(space)
}

#[derive(Serialize)]
struct MeanOutput<'a> {
    space: String,
    #[serde(flatten)]
    fit: &'a FrechetFit,
    /// `asym_cov / n`.
    estimator_covariance: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct Test2Output<'a> {
    space: String,
    alpha: f64,
    rejected: bool,
    #[serde(flatten)]
    result: &'a TwoSampleResult,
}

/// Space part of a simulation descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    Euclidean { dim: usize },
    Sphere { ambient: usize, metric: SphereMetricSpec },
    Spd { size: usize, metric: SpdMetricSpec },
    OpenBook { leaves: usize, spine_dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereMetricSpec {
    Intrinsic,
    Extrinsic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpdMetricSpec {
    Euclidean,
    LogEuclidean,
}

impl SpaceSpec {
    pub fn build(&self, numeric: bool) -> Result<Box<dyn Space>> {
        let bad = |m: &str| Err(Error::InvalidDescriptor(m.to_string()));
        Ok(match *self {
            SpaceSpec::Euclidean { dim } => {
                if dim == 0 {
                    return bad("dimension must be positive");
                }
                maybe_numeric(EuclideanSpace::new(dim), numeric)
            }
            SpaceSpec::Sphere { ambient, metric } => {
                if ambient < 2 {
                    return bad("sphere needs ambient dimension >= 2");
                }
                let s = match metric {
                    SphereMetricSpec::Intrinsic => SphereSpace::intrinsic(ambient),
                    SphereMetricSpec::Extrinsic => SphereSpace::extrinsic(ambient),
                };
                maybe_numeric(s, numeric)
            }
            SpaceSpec::Spd { size, metric } => {
                if size == 0 {
                    return bad("matrix size must be positive");
                }
                let s = match metric {
                    SpdMetricSpec::Euclidean => SpdSpace::euclidean(size),
                    SpdMetricSpec::LogEuclidean => SpdSpace::log_euclidean(size),
                };
                maybe_numeric(s, numeric)
            }
            SpaceSpec::OpenBook { leaves, spine_dim } => {
                if leaves < 2 {
                    return bad("open book needs at least 2 leaves");
                }
                maybe_numeric(OpenBookSpace::new(leaves, spine_dim), numeric)
            }
        })
    }
}

/// Monte Carlo experiment descriptor read by `frechet simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub space: SpaceSpec,
    pub distribution: Distribution,
    #[serde(default)]
    pub n: Option<usize>,
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub n1: Option<usize>,
    #[serde(default)]
    pub n2: Option<usize>,
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub numeric_derivatives: bool,
    /// Type-I only: draw both groups from one stream.
    #[serde(default)]
    pub shared_stream: bool,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Serialize)]
struct ConsistencyOutput<'a> {
    experiment: &'static str,
    reps: usize,
    seed: u64,
    rows: &'a [ConsistencyRow],
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    seed: u64,
    #[serde(flatten)]
    report: &'a McReport,
}

fn require(v: Option<usize>, name: &str) -> Result<usize> {
    v.ok_or_else(|| Error::InvalidDescriptor(format!("descriptor needs `{name}`")))
}

/// Runs a simulation descriptor and returns the JSON report.
pub fn simulate_json(spec: &SimulationSpec, experiment: &str, seed: u64) -> Result<String> {
    let sampler = Sampler::new(spec.distribution.clone(), seed)?;
    let space = spec.space.build(spec.numeric_derivatives)?;
    let opts = EstimateOptions::default();
    let report = match experiment {
        "coverage" => mc_coverage(&*space, &sampler, require(spec.n, "n")?, spec.reps, spec.alpha, &opts)?,
        "stickiness" => {
            let SpaceSpec::OpenBook { leaves, spine_dim } = spec.space else {
                return Err(Error::InvalidDescriptor(
                    "stickiness needs an open_book space".into(),
                ));
            };
            mc_stickiness(
                &OpenBookSpace::new(leaves, spine_dim),
                &sampler,
                require(spec.n, "n")?,
                spec.reps,
            )?
        }
        "type1" => mc_type1(
            &*space,
            &sampler,
            require(spec.n1, "n1")?,
            require(spec.n2, "n2")?,
            spec.reps,
            spec.alpha,
            spec.shared_stream,
            &opts,
        )?,
        "consistency" => {
            let grid = spec
                .n_grid
                .as_ref()
                .ok_or_else(|| Error::InvalidDescriptor("descriptor needs `n_grid`".into()))?;
            let rows = mc_consistency(&*space, &sampler, grid, spec.reps, &opts)?;
            return Ok(json(&ConsistencyOutput {
                experiment: "consistency",
                reps: spec.reps,
                seed,
                rows: &rows,
            }));
        }
        other => return Err(Error::InvalidArgument(format!("unknown experiment `{other}`"))),
    };
    Ok(json(&SimulationOutput {
        seed,
        report: &report,
    }))
}

fn parse_sites(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("bad site list `{text}`"));
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = text.split_once('-') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

fn dispatch(command: Command) -> Result<i32> {
    let opts = EstimateOptions::default();
    match command {
        Command::Mean {
            input,
            space,
            output,
        } => {
            let points = read_points(&read(&input)?, format_of(space.space))?;
            let s = build_space(&space, &[&points])?;
            let f = fit(&*s, &points, &space.options())?;
            let out = MeanOutput {
                space: s.describe(),
                estimator_covariance: f.estimator_covariance().map(|c| crate::ser::rows(&c)),
                fit: &f,
            };
            emit(output.as_deref(), &json(&out))?;
            Ok(EXIT_OK)
        }
        Command::Test2 {
            first,
            second,
            space,
            alpha,
            output,
        } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidArgument(format!("alpha must be in (0,1), got {alpha}")));
            }
            let format = format_of(space.space);
            let x = read_points(&read(&first)?, format)?;
            let y = read_points(&read(&second)?, format)?;
            let s = build_space(&space, &[&x, &y])?;
            let result = two_sample_test(&*s, &x, &y, &space.options())?;
            let out = Test2Output {
                space: s.describe(),
                alpha,
                rejected: result.p_value <= alpha,
                result: &result,
            };
            emit(output.as_deref(), &json(&out))?;
            Ok(EXIT_OK)
        }
        Command::Fiber {
            dataset,
            metric,
            alpha,
            output,
            summary,
        } => {
            let data = FiberDataset::from_csv(&read(&dataset)?)?;
            let report = run_fiber(&data, metric.into(), alpha, &opts)?;
            emit(output.as_deref(), &report.to_csv())?;
            #[derive(Serialize)]
            struct Summary<'a> {
                metric: &'a str,
                alpha: f64,
                sites: usize,
                bonferroni_global_p: Option<f64>,
                bonferroni_rejections: usize,
                bh_rejections: usize,
                failed_sites: &'a [crate::fiber::FailedSite],
            }
            let text = json(&Summary {
                metric: report.metric,
                alpha,
                sites: report.sites.len(),
                bonferroni_global_p: report.bonferroni_global_p,
                bonferroni_rejections: report.bonferroni_rejections,
                bh_rejections: report.bh_rejections,
                failed_sites: &report.failed_sites,
            });
            match summary {
                Some(path) => emit(Some(&path), &text)?,
                None => eprint!("{text}"),
            }
            if report.failed_sites.is_empty() {
                Ok(EXIT_OK)
            } else {
                for f in &report.failed_sites {
                    eprintln!("site {}: {}", f.site, f.error);
                }
                Ok(EXIT_NUMERIC)
            }
        }
        Command::Simulate {
            experiment,
            descriptor,
            seed,
            output,
        } => {
            let spec: SimulationSpec = serde_json::from_str(&read(&descriptor)?)
                .map_err(|e| Error::InvalidDescriptor(e.to_string()))?;
            let name = match experiment {
                ExperimentArg::Coverage => "coverage",
                ExperimentArg::Stickiness => "stickiness",
                ExperimentArg::Type1 => "type1",
                ExperimentArg::Consistency => "consistency",
            };
            emit(output.as_deref(), &simulate_json(&spec, name, seed)?)?;
            Ok(EXIT_OK)
        }
        Command::GenFiber {
            group_sizes,
            sites,
            effect_sites,
            effect_size,
            seed,
            output,
        } => {
            let [g0, g1] = group_sizes[..] else {
                return Err(Error::InvalidArgument("--group-sizes takes two counts".into()));
            };
            let config = FiberConfig {
                group_sizes: [g0, g1],
                sites,
                effect_sites: parse_sites(&effect_sites)?,
                effect_size,
                seed,
                ..FiberConfig::default()
            };
            emit(output.as_deref(), &generate(&config)?.to_csv())?;
            Ok(EXIT_OK)
        }
    }
}
