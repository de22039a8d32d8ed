//! Gaussian-limit diagnostics: Kolmogorov–Smirnov distance to a centered normal and
//! the covariance structure `Cov(W(A), W(B)) = σ² λ(A ∩ B)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};
use crate::lattice::Rect;

/// Asymptotic 95% Kolmogorov critical value `c` in `c / √N`.
pub const KS_CRITICAL_95: f64 = 1.358;
/// Slack applied to the asymptotic critical value by default.
pub const KS_SLACK: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub sample_size: usize,
    pub target_variance: f64,
    pub statistic: f64,
    pub threshold: f64,
    /// Constant sample; reported as a failure whatever the statistic.
    pub degenerate: bool,
    pub passed: bool,
}

/// `2 · 1.358 / √N`.
pub fn default_ks_threshold(n: usize) -> f64 {
    KS_SLACK * KS_CRITICAL_95 / (n as f64).sqrt()
}

/// `sup_x |F_N(x) − Φ(x/σ)|`.
pub fn ks_statistic(sample: &[f64], target_variance: f64) -> Result<f64> {
    if sample.is_empty() {
        return invalid("empty sample");
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return invalid("sample contains non-finite values");
    }
    if !(target_variance.is_finite() && target_variance > 0.0) {
        return invalid("target variance must be positive");
    }
    let normal = Normal::new(0.0, target_variance.sqrt()).expect("positive standard deviation");
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = normal.cdf(*x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// KS test of `sample` against `N(0, target_variance)`.
pub fn gaussian_limit_test(sample: &[f64], target_variance: f64, threshold: Option<f64>) -> Result<KsReport> {
    let threshold = threshold.unwrap_or_else(|| default_ks_threshold(sample.len()));
    let statistic = ks_statistic(sample, target_variance)?;
    let first = sample[0];
    let degenerate = sample.iter().all(|v| *v == first);
    Ok(KsReport {
        sample_size: sample.len(),
        target_variance,
        statistic,
        threshold,
        degenerate,
        passed: !degenerate && statistic <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub replicas: usize,
    pub empirical: f64,
    pub std_error: f64,
    /// `target_variance · λ(A ∩ B)`.
    pub target: f64,
    pub intersection_volume: f64,
    /// `|empirical − target| / target`, absent when the target is zero.
    pub relative_error: Option<f64>,
    pub relative_tolerance: f64,
    pub se_multiplier: f64,
    pub passed: bool,
}

pub const MIN_COVARIANCE_REPLICAS: usize = 1000;

/// Empirical covariance of paired samples of `n^{−d/2}S_n(A)` and `n^{−d/2}S_n(B)`.
/// With `λ(A∩B) > 0` the check is relative; otherwise the covariance must lie within
/// `se_multiplier` standard errors of zero.
pub fn covariance_structure_test(
    at_a: &[f64],
    at_b: &[f64],
    a: &Rect,
    b: &Rect,
    target_variance: f64,
    relative_tolerance: f64,
    se_multiplier: f64,
) -> Result<CovarianceReport> {
    if at_a.len() != at_b.len() {
        return invalid("paired samples differ in length");
    }
    if at_a.len() < MIN_COVARIANCE_REPLICAS {
        return invalid(format!("at least {MIN_COVARIANCE_REPLICAS} replicas are required"));
    }
    if a.dim() != b.dim() {
        return invalid("rectangles differ in dimension");
    }
    let n = at_a.len() as f64;
    let mean_a = at_a.iter().sum::<f64>() / n;
    let mean_b = at_b.iter().sum::<f64>() / n;
    let products: Vec<f64> = at_a
        .iter()
        .zip(at_b)
        .map(|(x, y)| (x - mean_a) * (y - mean_b))
        .collect();
    let empirical = products.iter().sum::<f64>() / (n - 1.0);
    let pm = products.iter().sum::<f64>() / n;
    let std_error = (products.iter().map(|u| (u - pm).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let intersection_volume = a.intersection_volume(b);
    let target = target_variance * intersection_volume;
    let (relative_error, passed) = if target > 0.0 {
        let rel = (empirical - target).abs() / target;
        (Some(rel), rel <= relative_tolerance)
    } else {
        (None, empirical.abs() <= se_multiplier * std_error)
    };
    Ok(CovarianceReport {
        replicas: at_a.len(),
        empirical,
        std_error,
        target,
        intersection_volume,
        relative_error,
        relative_tolerance,
        se_multiplier,
        passed,
    })
}
