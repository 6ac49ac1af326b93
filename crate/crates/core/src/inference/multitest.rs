//! Bonferroni and Benjamini–Hochberg multiple-testing procedures.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bonferroni,
    Bh,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiTestResult {
    pub method: Method,
    pub alpha: f64,
    pub pvalues: Vec<f64>,
    /// Site indices sorted by ascending p-value, ties by index.
    pub order: Vec<usize>,
    /// Per site, in original order.
    pub rejected: Vec<bool>,
    pub rejections: usize,
    /// `min(1, m · min pᵢ)` for Bonferroni.
    pub global_p: Option<f64>,
}

fn validate(pvalues: &[f64], alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0,1), got {alpha}")));
    }
    if let Some(p) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("p-value {p} outside [0,1]")));
    }
    Ok(())
}

fn ascending_order(pvalues: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pvalues.len()).collect();
    // stable: equal p-values keep index order
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    order
}

/// Site `i` is rejected iff `pᵢ ≤ α/m`.
pub fn bonferroni(pvalues: &[f64], alpha: f64) -> Result<MultiTestResult> {
    validate(pvalues, alpha)?;
    let m = pvalues.len();
    let threshold = alpha / m as f64;
    let rejected: Vec<bool> = pvalues.iter().map(|&p| p <= threshold).collect();
    let global_p = pvalues
        .iter()
        .copied()
        .reduce(f64::min)
        .map(|min| (m as f64 * min).min(1.0));
    Ok(MultiTestResult {
        method: Method::Bonferroni,
        alpha,
        pvalues: pvalues.to_vec(),
        order: ascending_order(pvalues),
        rejections: rejected.iter().filter(|&&r| r).count(),
        rejected,
        global_p,
    })
}

/// Benjamini–Hochberg step-up: reject the `i*` smallest p-values, where
/// `i*` is the largest `i` with `p_(i) ≤ i α / m`.
pub fn bh_fdr(pvalues: &[f64], alpha: f64) -> Result<MultiTestResult> {
    validate(pvalues, alpha)?;
    let m = pvalues.len();
    let order = ascending_order(pvalues);
    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|&(i, &site)| pvalues[site] <= (i + 1) as f64 * alpha / m as f64)
        .map_or(0, |(i, _)| i + 1);
    let mut rejected = vec![false; m];
    for &site in &order[..cutoff] {
        rejected[site] = true;
    }
    Ok(MultiTestResult {
        method: Method::Bh,
        alpha,
        pvalues: pvalues.to_vec(),
        order,
        rejected,
        rejections: cutoff,
        global_p: None,
    })
}
