//! Chi-square two-sample tests, multiple testing and the distribution
//! functions they rely on.

mod chi2;
mod ks;
mod multitest;
mod two_sample;

pub use chi2::{
    chi2_cdf, chi2_quantile, chi2_sf, erfc, ln_gamma, normal_cdf, regularized_gamma,
};
pub use ks::{kolmogorov_sf, ks_test, KsResult};
pub use multitest::{bh_fdr, bonferroni, Method, MultiTestResult};
pub use two_sample::{two_sample_statistic, two_sample_test, TwoSampleResult};

/// p-values below this are reported but flagged as unreliable under the
/// chi-square approximation.
pub const TINY_P: f64 = 1e-5;
