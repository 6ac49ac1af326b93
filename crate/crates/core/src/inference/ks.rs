//! One-sample Kolmogorov–Smirnov test.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// `Q_KS(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided test of `data` against a continuous CDF, using the asymptotic
/// distribution with the usual `√n + 0.12 + 0.11/√n` small-sample scaling.
pub fn ks_test(data: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs: Vec<f64> = data.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf);
    }
    let root = nf.sqrt();
    let p_value = if n == 0 {
        1.0
    } else {
        kolmogorov_sf((root + 0.12 + 0.11 / root) * d)
    };
    KsResult {
        statistic: d,
        p_value,
        n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_fits_uniform() {
        let data: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let r = ks_test(&data, |x| x.clamp(0.0, 1.0));
        assert!(r.statistic <= 0.0005 + 1e-12);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn shifted_data_is_rejected() {
        let data: Vec<f64> = (0..500).map(|i| 0.2 + 0.8 * (i as f64 + 0.5) / 500.0).collect();
        let r = ks_test(&data, |x| x.clamp(0.0, 1.0));
        assert!((r.statistic - 0.2).abs() < 1e-3);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn kolmogorov_known_value() {
        // Q_KS(1.36) ≈ 0.049
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }
}
