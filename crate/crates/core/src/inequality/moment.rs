//! `‖Σ_{0⪯k⪯n} X_k‖_p` against `(Σ_{0⪯k⪯n} ‖X_k‖_p²)^{1/2}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::law::InnovationLaw;
use crate::simulation::{innovation_box, sample_innovations, sample_linear_field, sample_product_omd, FieldSpec};
use crate::rng::substream;
use crate::chaos::MIN_REPLICAS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ExactFactorized,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRatioReport {
    pub d: usize,
    pub p: f64,
    /// Upper corner `n`; the sum runs over `0 ⪯ k ⪯ n`.
    pub n: Vec<usize>,
    pub measured: f64,
    pub reference: f64,
    pub ratio: f64,
    pub method: MomentMethod,
    /// 95% interval for `ratio` (Monte Carlo only).
    pub ratio_ci: Option<(f64, f64)>,
    pub replicas: Option<usize>,
}

/// Distribution of `Σ_{i=1}^{terms} η_i` for iid Rademacher `η_i`, as probabilities of
/// the values `-terms, -terms+2, ..., terms`.
pub fn rademacher_sum_distribution(terms: usize) -> Vec<f64> {
    let mut probs = vec![1.0];
    for _ in 0..terms {
        let mut next = vec![0.0; probs.len() + 1];
        for (j, q) in probs.iter().enumerate() {
            next[j] += 0.5 * q;
            next[j + 1] += 0.5 * q;
        }
        probs = next;
    }
    probs
}

/// `‖Σ_{i=1}^{terms} η_i‖_p`, exactly.
pub fn rademacher_sum_norm(terms: usize, p: f64) -> f64 {
    let probs = rademacher_sum_distribution(terms);
    let moment: f64 = probs
        .iter()
        .enumerate()
        .map(|(j, q)| q * (2.0 * j as f64 - terms as f64).abs().powf(p))
        .sum();
    moment.powf(1.0 / p)
}

fn check(p: f64, n: &[usize]) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return invalid(format!("p must be > 1, got {p}"));
    }
    if n.is_empty() {
        return invalid("n must have at least one axis");
    }
    Ok(())
}

/// `‖X_0‖_p` for a stationary field.
fn single_site_norm(field: &FieldSpec, p: f64, replicas: usize, seed: u64) -> Result<f64> {
    match field {
        FieldSpec::ProductOmd => Ok(1.0),
        FieldSpec::Iid { law } => Ok(law.abs_moment(p)?.powf(1.0 / p)),
        FieldSpec::Linear { coefficients, law } => {
            Ok(coefficients.lp_norm_estimate(law, p, replicas, seed)?.estimate)
        }
    }
}

/// Moment ratio for a field on `{0..n}^d`. The exact method uses
/// `‖Σ_{k} Z_k‖_p = Π_s ‖Σ_{i=0}^{n_s} η^{(s)}_i‖_p` and is available for the
/// product field only.
pub fn moment_ratio(
    field: &FieldSpec,
    n: &[usize],
    p: f64,
    method: MomentMethod,
    replicas: usize,
    seed: u64,
) -> Result<MomentRatioReport> {
    check(p, n)?;
    let d = n.len();
    let counts: Vec<usize> = n.iter().map(|v| v + 1).collect();
    let sites: f64 = counts.iter().map(|&c| c as f64).product();
    match method {
        MomentMethod::ExactFactorized => {
            if !matches!(field, FieldSpec::ProductOmd) {
                return Err(Error::Unsupported(
                    "the exact factorized method applies to the product field only".into(),
                ));
            }
            let measured: f64 = counts.iter().map(|&c| rademacher_sum_norm(c, p)).product();
            let reference = sites.sqrt();
            Ok(MomentRatioReport {
                d,
                p,
                n: n.to_vec(),
                measured,
                reference,
                ratio: measured / reference,
                method,
                ratio_ci: None,
                replicas: None,
            })
        }
        MomentMethod::MonteCarlo => {
            if replicas < MIN_REPLICAS {
                return invalid(format!("at least {MIN_REPLICAS} replicas are required"));
            }
            let draws = (0..replicas as u64)
                .into_par_iter()
                .map(|r| total_sum(field, &counts, seed, r).map(|s| s.abs().powf(p)))
                .collect::<Result<Vec<f64>>>()?;
            let reps = draws.len() as f64;
            let mean = draws.iter().sum::<f64>() / reps;
            let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1.0);
            let se = (var / reps).sqrt();
            let site = single_site_norm(field, p, replicas, seed ^ 0x5eed)?;
            let reference = sites.sqrt() * site;
            let measured = mean.powf(1.0 / p);
            let z = 1.959_963_984_540_054;
            let lo = (mean - z * se).max(0.0).powf(1.0 / p) / reference;
            let hi = (mean + z * se).powf(1.0 / p) / reference;
            Ok(MomentRatioReport {
                d,
                p,
                n: n.to_vec(),
                measured,
                reference,
                ratio: measured / reference,
                method,
                ratio_ci: Some((lo, hi)),
                replicas: Some(replicas),
            })
        }
    }
}

/// `Σ_{k} X_k` over a box with the given per-axis counts for one replica.
fn total_sum(field: &FieldSpec, counts: &[usize], seed: u64, replica: u64) -> Result<f64> {
    match field {
        FieldSpec::ProductOmd => Ok(sample_product_omd(seed, replica, counts)?.values().iter().sum()),
        FieldSpec::Iid { law } => Ok(sample_innovations(law, &vec![1; counts.len()], counts, seed, substream(replica, 0))?
            .values()
            .iter()
            .sum()),
        FieldSpec::Linear { coefficients, law } => {
            let n = counts[0];
            if counts.iter().any(|&c| c != n) {
                return Err(Error::Unsupported(
                    "Monte Carlo moment ratio for linear fields needs a cubic box".into(),
                ));
            }
            linear_sum(coefficients, law, n, seed, replica)
        }
    }
}

fn linear_sum(a: &crate::chaos::ChaosElement, law: &InnovationLaw, n: usize, seed: u64, replica: u64) -> Result<f64> {
    let (lower, extents) = innovation_box(a, n)?;
    let eps = sample_innovations(law, &lower, &extents, seed, substream(replica, 0))?;
    Ok(sample_linear_field(a, &eps, n)?.values().iter().sum())
}
