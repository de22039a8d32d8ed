//! Projective series conditions
//!
//! `Σ_{k≥1} k^{d−1} ‖E[f | G_k]‖_p` for `G_k = T_s^k M` or the half-space algebra
//! `F_{k,s}`, and the coefficient series of a linear field
//! `Σ_{k≥1} k^{d−1} (Σ_{i∈Λ_{k,s}} a_i²)^{1/2}` with its Rosenthal augmentation.

use serde::{Deserialize, Serialize};

use crate::chaos::{ChaosElement, SigmaAlgebraSpec};
use crate::error::{invalid, Error, Result};
use crate::law::InnovationLaw;
use crate::lattice::{box_indices, check_axis, MultiIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    ShiftedPast,
    HalfSpace,
    /// `Σ k^{d−1} (Σ_{Λ_{k,s}} a_i²)^{1/2}`.
    LinearL2,
    /// `Σ k^{d−1} [(Σ_{Λ_{k,s}} a_i²)^{1/2} + (Σ_{Λ_{k,s}} |a_i|^p)^{1/p}]`.
    LinearRosenthal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesStatus {
    /// Tail exactly zero past the truncation index.
    Exact,
    /// Support truncated, last term below the tail tolerance.
    Converged,
    /// Cap reached with terms above tolerance.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub k: u64,
    pub weight: f64,
    pub norm: f64,
    /// `weight · norm`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub axis: usize,
    pub p: f64,
    pub kind: SeriesKind,
    pub terms: Vec<SeriesTerm>,
    pub partial_sums: Vec<f64>,
    /// Last `k` evaluated.
    pub truncation: u64,
    pub status: SeriesStatus,
    pub converged: bool,
    /// Partial sum at truncation; `None` stands for an unbounded or inconclusive total.
    pub total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub cap: u64,
    pub tail_tolerance: f64,
    /// Monte Carlo settings used for `p ≠ 2`.
    pub replicas: usize,
    pub seed: u64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            cap: 10_000,
            tail_tolerance: 1e-12,
            replicas: 2_000,
            seed: 0,
        }
    }
}

/// Coefficients given by a closed-form rule, materialized on `{0..extent}^d`.
pub struct CoefficientGenerator<'a> {
    pub dim: usize,
    pub extent: i64,
    pub rule: &'a dyn Fn(&MultiIndex) -> f64,
}

/// Largest number of sites a generator may materialize.
pub const MAX_GENERATED_SITES: u64 = 20_000_000;

impl CoefficientGenerator<'_> {
    pub fn materialize(&self) -> Result<ChaosElement> {
        if self.extent < 0 {
            return invalid("generator extent must be nonnegative");
        }
        let sites = (self.extent as u64 + 1).checked_pow(self.dim as u32);
        if sites.is_none_or(|n| n > MAX_GENERATED_SITES) {
            return Err(Error::Unsupported(format!(
                "materializing {{0..{}}}^{} exceeds {MAX_GENERATED_SITES} sites; lower the cap",
                self.extent, self.dim
            )));
        }
        let lower = vec![0i64; self.dim];
        let upper = vec![self.extent; self.dim];
        ChaosElement::from_entries(
            self.dim,
            box_indices(&lower, &upper).map(|i| {
                let c = (self.rule)(&i);
                (i, c)
            }),
        )
    }
}

fn require_measurable(f: &ChaosElement) -> Result<()> {
    let base = MultiIndex::zeros(f.dim());
    let offending = f.non_measurable_indices(&base)?;
    if offending.is_empty() {
        Ok(())
    } else {
        Err(Error::NotMeasurable { base, offending })
    }
}

fn spec_for(kind: SeriesKind, d: usize, s: usize, k: i64) -> SigmaAlgebraSpec {
    match kind {
        SeriesKind::ShiftedPast => SigmaAlgebraSpec::axis_past(d, s, k),
        _ => SigmaAlgebraSpec::half_space(s, k),
    }
}

/// Accumulates terms `k = 1, 2, ...`. `norm_of` maps the projection at level `k`
/// to the term norm. Projections are nested, so each one is taken from the last.
fn accumulate(
    f: &ChaosElement,
    s: usize,
    p: f64,
    kind: SeriesKind,
    truncated: bool,
    options: &SeriesOptions,
    mut norm_of: impl FnMut(&ChaosElement) -> Result<f64>,
) -> Result<SeriesReport> {
    let d = f.dim();
    check_axis(s, d)?;
    let mut terms = Vec::new();
    let mut partial_sums = Vec::new();
    let mut projection = f.clone();
    let mut total = 0.0;
    let mut exhausted = false;
    let mut k = 0u64;
    while k < options.cap {
        k += 1;
        projection = projection.project(&spec_for(kind, d, s, k as i64))?;
        if projection.is_zero() {
            exhausted = true;
            k -= 1;
            break;
        }
        let weight = (k as f64).powi(d as i32 - 1);
        let norm = norm_of(&projection)?;
        let value = weight * norm;
        total += value;
        terms.push(SeriesTerm { k, weight, norm, value });
        partial_sums.push(total);
    }
    if !exhausted && k == options.cap {
        // the cap may coincide with the support extent
        exhausted = projection
            .project(&spec_for(kind, d, s, k as i64 + 1))?
            .is_zero();
    }
    let last = terms.last().map_or(0.0, |t| t.value);
    let status = if exhausted && !truncated {
        SeriesStatus::Exact
    } else if last <= options.tail_tolerance {
        SeriesStatus::Converged
    } else {
        SeriesStatus::Inconclusive
    };
    let converged = status != SeriesStatus::Inconclusive;
    Ok(SeriesReport {
        axis: s,
        p,
        kind,
        terms,
        partial_sums,
        truncation: k,
        status,
        converged,
        total: converged.then_some(total),
    })
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        invalid(format!("p must be >= 1, got {p}"))
    }
}

fn condition_impl(
    f: &ChaosElement,
    s: usize,
    p: f64,
    law: &InnovationLaw,
    kind: SeriesKind,
    truncated: bool,
    options: &SeriesOptions,
) -> Result<SeriesReport> {
    check_p(p)?;
    require_measurable(f)?;
    if !matches!(kind, SeriesKind::ShiftedPast | SeriesKind::HalfSpace) {
        return invalid("series_condition takes a shifted_past or half_space kind");
    }
    accumulate(f, s, p, kind, truncated, options, |proj| {
        if p == 2.0 {
            Ok(proj.l2_norm(law))
        } else {
            Ok(proj.lp_norm_estimate(law, p, options.replicas, options.seed)?.estimate)
        }
    })
}

/// `Σ_{k≥1} k^{d−1} ‖E[f | G_k]‖_p` for a finitely supported `M`-measurable `f`.
pub fn series_condition(
    f: &ChaosElement,
    s: usize,
    p: f64,
    law: &InnovationLaw,
    kind: SeriesKind,
    options: &SeriesOptions,
) -> Result<SeriesReport> {
    condition_impl(f, s, p, law, kind, false, options)
}

/// As [`series_condition`] for coefficients given by a rule, materialized up to
/// `options.cap` along every axis.
pub fn series_condition_generated(
    rule: &dyn Fn(&MultiIndex) -> f64,
    dim: usize,
    s: usize,
    p: f64,
    law: &InnovationLaw,
    kind: SeriesKind,
    options: &SeriesOptions,
) -> Result<SeriesReport> {
    let f = CoefficientGenerator {
        dim,
        extent: options.cap as i64,
        rule,
    }
    .materialize()?;
    condition_impl(&f, s, p, law, kind, true, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConditionReport {
    pub l2: SeriesReport,
    /// Present when `p > 2`.
    pub rosenthal: Option<SeriesReport>,
    /// Term-wise `‖E[X_0|F_{k,s}]‖_2 ≤ σ · (Σ_{Λ_{k,s}} a_i²)^{1/2}`.
    pub half_space_dominated: bool,
}

fn linear_impl(
    a: &ChaosElement,
    s: usize,
    d: usize,
    p: f64,
    law: &InnovationLaw,
    truncated: bool,
    options: &SeriesOptions,
) -> Result<LinearConditionReport> {
    check_p(p)?;
    if a.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: a.dim(),
        });
    }
    require_measurable(a)?;
    let l2 = accumulate(a, s, 2.0, SeriesKind::LinearL2, truncated, options, |proj| {
        Ok(proj.sum_of_squares().sqrt())
    })?;
    let rosenthal = if p > 2.0 {
        Some(accumulate(a, s, p, SeriesKind::LinearRosenthal, truncated, options, |proj| {
            let lp: f64 = proj.iter().map(|(_, c)| c.abs().powf(p)).sum();
            Ok(proj.sum_of_squares().sqrt() + lp.powf(1.0 / p))
        })?)
    } else {
        None
    };
    let exact = accumulate(a, s, 2.0, SeriesKind::HalfSpace, truncated, options, |proj| {
        Ok(proj.l2_norm(law))
    })?;
    let sigma = law.std_dev();
    let half_space_dominated = exact.terms.len() == l2.terms.len()
        && exact
            .terms
            .iter()
            .zip(&l2.terms)
            .all(|(e, b)| e.value <= sigma * b.value * (1.0 + 1e-14));
    Ok(LinearConditionReport {
        l2,
        rosenthal,
        half_space_dominated,
    })
}

/// Coefficient series of the linear field `X_k = Σ_{j⪰0} a_j ε_{k−j}`.
pub fn linear_condition(
    a: &ChaosElement,
    s: usize,
    d: usize,
    p: f64,
    law: &InnovationLaw,
    options: &SeriesOptions,
) -> Result<LinearConditionReport> {
    linear_impl(a, s, d, p, law, false, options)
}

pub fn linear_condition_generated(
    rule: &dyn Fn(&MultiIndex) -> f64,
    s: usize,
    d: usize,
    p: f64,
    law: &InnovationLaw,
    options: &SeriesOptions,
) -> Result<LinearConditionReport> {
    let a = CoefficientGenerator {
        dim: d,
        extent: options.cap as i64,
        rule,
    }
    .materialize()?;
    linear_impl(&a, s, d, p, law, true, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(c: &[i64]) -> MultiIndex {
        MultiIndex::from_slice(c)
    }

    fn geometric(i: &MultiIndex) -> f64 {
        0.5f64.powi(i.coord(1) as i32)
    }

    #[test]
    fn half_space_example() {
        let f = ChaosElement::from_entries(2, [(mi(&[0, 0]), 1.0), (mi(&[1, 1]), 1.0)]).unwrap();
        let law = InnovationLaw::rademacher();
        let r = series_condition(&f, 1, 2.0, &law, SeriesKind::HalfSpace, &SeriesOptions::default()).unwrap();
        assert_eq!(r.terms.len(), 1);
        assert_eq!(r.terms[0].value, 1.0);
        assert_eq!(r.total, Some(1.0));
        assert_eq!(r.status, SeriesStatus::Exact);
    }

    #[test]
    fn lag_zero_has_empty_series() {
        let f = ChaosElement::innovation(mi(&[0, 0, 0]));
        let r = series_condition(
            &f,
            2,
            2.0,
            &InnovationLaw::rademacher(),
            SeriesKind::ShiftedPast,
            &SeriesOptions::default(),
        )
        .unwrap();
        assert_eq!(r.total, Some(0.0));
        assert!(r.terms.is_empty());
    }

    #[test]
    fn geometric_total() {
        let options = SeriesOptions {
            cap: 60,
            ..SeriesOptions::default()
        };
        let law = InnovationLaw::standard_gaussian();
        let r = series_condition_generated(&geometric, 1, 1, 2.0, &law, SeriesKind::ShiftedPast, &options).unwrap();
        // independent closed form: Σ_k 2^{-k} · 2/√3
        let oracle: f64 = (1..=200).map(|k| 0.5f64.powi(k) * 2.0 / 3f64.sqrt()).sum();
        assert!((r.total.unwrap() - oracle).abs() < 1e-9);
        assert_eq!(r.status, SeriesStatus::Converged);
        let lin = linear_condition_generated(&geometric, 1, 1, 2.0, &law, &options).unwrap();
        assert!((lin.l2.total.unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-9);
        assert!((lin.l2.total.unwrap() - r.total.unwrap()).abs() < 1e-15);
        assert!(lin.half_space_dominated);
        assert!(lin.rosenthal.is_none());
    }

    #[test]
    fn cap_reached_is_inconclusive() {
        let options = SeriesOptions {
            cap: 5,
            ..SeriesOptions::default()
        };
        let slow = |i: &MultiIndex| 1.0 / (1.0 + i.coord(1) as f64).powi(2);
        let r = series_condition_generated(
            &slow,
            1,
            1,
            2.0,
            &InnovationLaw::rademacher(),
            SeriesKind::HalfSpace,
            &options,
        )
        .unwrap();
        assert_eq!(r.status, SeriesStatus::Inconclusive);
        assert!(!r.converged);
        assert_eq!(r.total, None);
        assert_eq!(r.truncation, 5);
    }

    #[test]
    fn finite_support_hits_cap_exactly() {
        let f = ChaosElement::from_entries(1, [(mi(&[0]), 1.0), (mi(&[3]), 1.0)]).unwrap();
        let options = SeriesOptions {
            cap: 3,
            ..SeriesOptions::default()
        };
        let r = series_condition(&f, 1, 2.0, &InnovationLaw::rademacher(), SeriesKind::HalfSpace, &options).unwrap();
        assert_eq!(r.status, SeriesStatus::Exact);
        assert_eq!(r.total, Some(3.0));
    }

    #[test]
    fn weights_are_powers() {
        let f = ChaosElement::from_entries(3, [(mi(&[0, 3, 0]), 1.0)]).unwrap();
        let r = series_condition(
            &f,
            2,
            2.0,
            &InnovationLaw::rademacher(),
            SeriesKind::ShiftedPast,
            &SeriesOptions::default(),
        )
        .unwrap();
        let w: Vec<f64> = r.terms.iter().map(|t| t.weight).collect();
        assert_eq!(w, vec![1.0, 4.0, 9.0]);
        assert_eq!(r.total, Some(14.0));
    }

    #[test]
    fn rosenthal_variant() {
        let a = ChaosElement::from_entries(1, [(mi(&[0]), 1.0), (mi(&[1]), 1.0), (mi(&[2]), 1.0)]).unwrap();
        let r = linear_condition(&a, 1, 1, 4.0, &InnovationLaw::rademacher(), &SeriesOptions::default()).unwrap();
        // k=1: √2 + 2^{1/4}; k=2: 1 + 1
        let ros = r.rosenthal.unwrap();
        let expected = 2f64.sqrt() + 2f64.powf(0.25) + 2.0;
        assert!((ros.total.unwrap() - expected).abs() < 1e-12);
        assert!((r.l2.total.unwrap() - (2f64.sqrt() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn non_measurable_rejected() {
        let f = ChaosElement::innovation(mi(&[-1]));
        assert!(series_condition(
            &f,
            1,
            2.0,
            &InnovationLaw::rademacher(),
            SeriesKind::HalfSpace,
            &SeriesOptions::default()
        )
        .is_err());
        assert!(linear_condition(&f, 1, 2, 2.0, &InnovationLaw::rademacher(), &SeriesOptions::default()).is_err());
    }

    #[test]
    fn lp_series_uses_monte_carlo() {
        let f = ChaosElement::from_entries(1, [(mi(&[0]), 1.0), (mi(&[1]), 1.0)]).unwrap();
        let options = SeriesOptions {
            replicas: 200,
            ..SeriesOptions::default()
        };
        let r = series_condition(&f, 1, 4.0, &InnovationLaw::rademacher(), SeriesKind::HalfSpace, &options).unwrap();
        // single term ε_{-1}: |ε|≡1
        assert_eq!(r.total, Some(1.0));
    }
}
