//! Fréchet means on non-Euclidean sample spaces and the CLT-based
//! inference built on them.
//!
//! * [`spaces`]: Euclidean space, the sphere (intrinsic and extrinsic), SPD
//!   matrices (Euclidean and log-Euclidean) and the open book.
//! * [`estimator`]: sample Fréchet means and the sandwich covariance
//!   `Λ⁻¹CΛ⁻¹` of their chart coordinates.
//! * [`inference`]: two-sample chi-square tests, Bonferroni and
//!   Benjamini–Hochberg corrections.
//! * [`simulate`]: seeded samplers and Monte Carlo checks of coverage,
//!   consistency, stickiness and type-I error.
//! * [`fiber`]: synthetic diffusion-tensor fiber datasets and the per-site
//!   testing pipeline.
//! * [`cli`]: the `frechet` command-line front end.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod fiber;
pub mod geometry;
pub mod inference;
pub mod linalg;
mod ser;
pub mod simulate;
pub mod spaces;

pub use error::{Error, Result};
pub use estimator::{
    confidence_region_contains, estimate_mean, fit, sandwich_covariance, EstimateOptions,
    FrechetFit, Strategy,
};
pub use geometry::{frechet_value, numeric_gradient, numeric_hessian, DiffConfig, Point, Space};
