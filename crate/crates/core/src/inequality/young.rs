//! Young functions `ψ_α(x) = exp((x + h_α)^α) − exp(h_α^α)` with
//! `h_α = ((1−α)/α)^{1/α}` for `0 < α < 1` and `h_α = 0` otherwise, the
//! exponents `β(q) = 2q/(2 − dq)`, and empirical Luxemburg norms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YoungFunctionSpec {
    /// `ψ_α`.
    Psi { alpha: f64 },
    /// `φ_p(x) = x^p`, whose Luxemburg norm is the `L^p` norm.
    Power { p: f64 },
}

impl YoungFunctionSpec {
    pub fn psi(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("young exponent must be positive, got {alpha}"));
        }
        Ok(YoungFunctionSpec::Psi { alpha })
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return invalid(format!("power exponent must be >= 1, got {p}"));
        }
        Ok(YoungFunctionSpec::Power { p })
    }

    /// `h_α`, zero for the power family.
    pub fn h(&self) -> f64 {
        match *self {
            YoungFunctionSpec::Psi { alpha } if alpha < 1.0 => ((1.0 - alpha) / alpha).powf(1.0 / alpha),
            _ => 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            YoungFunctionSpec::Psi { alpha } => {
                let h = self.h();
                (x + h).powf(alpha).exp() - h.powf(alpha).exp()
            }
            YoungFunctionSpec::Power { p } => x.powf(p),
        }
    }

    /// `ln ψ(x)` without overflow; `-∞` at zero.
    pub fn ln_eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            YoungFunctionSpec::Psi { alpha } => {
                let h = self.h();
                let a = (x + h).powf(alpha);
                let b = h.powf(alpha);
                a + (-(b - a).exp_m1()).ln()
            }
            YoungFunctionSpec::Power { p } => p * x.ln(),
        }
    }

    /// `ψ^{-1}(y)` for `y ≥ 0`.
    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            YoungFunctionSpec::Psi { alpha } => {
                let h = self.h();
                (y + h.powf(alpha).exp()).ln().powf(1.0 / alpha) - h
            }
            YoungFunctionSpec::Power { p } => y.powf(1.0 / p),
        }
    }
}

/// `ψ_q(x)`.
pub fn young_eval(q: f64, x: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return invalid(format!("young functions are evaluated at x >= 0, got {x}"));
    }
    Ok(YoungFunctionSpec::psi(q)?.eval(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaExponent {
    Finite { value: f64 },
    /// `q = 2/d`: the bounded-field regime.
    Unbounded,
}

/// `β(q) = 2q / (2 − dq)` for `0 < q ≤ 2/d`.
pub fn beta_exponent(q: f64, d: usize) -> Result<BetaExponent> {
    if d == 0 {
        return invalid("d must be at least 1");
    }
    let limit = 2.0 / d as f64;
    if !(q.is_finite() && q > 0.0) || q > limit * (1.0 + 1e-12) {
        return invalid(format!("q must lie in (0, 2/d] = (0, {limit}], got {q}"));
    }
    if is_critical(q, d) {
        return Ok(BetaExponent::Unbounded);
    }
    Ok(BetaExponent::Finite {
        value: 2.0 * q / (2.0 - d as f64 * q),
    })
}

pub(crate) fn is_critical(q: f64, d: usize) -> bool {
    (q - 2.0 / d as f64).abs() <= 1e-12 * (2.0 / d as f64)
}

/// `inf{c > 0 : mean ψ(|Z_i|/c) ≤ 1}` over the empirical measure, by bisection in
/// `ln c` to relative accuracy well below `1e-8`.
pub fn luxemburg_norm(sample: &[f64], psi: &YoungFunctionSpec) -> Result<f64> {
    if sample.is_empty() {
        return invalid("luxemburg norm of an empty sample");
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return invalid("sample contains non-finite values");
    }
    let abs: Vec<f64> = sample.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    let Some(max) = abs.iter().copied().reduce(f64::max) else {
        return Ok(0.0);
    };
    let ln_n = (sample.len() as f64).ln();
    // ln of the empirical mean of ψ(|z|/c), zeros contributing nothing
    let ln_mean = |c: f64| -> f64 {
        let logs: Vec<f64> = abs.iter().map(|z| psi.ln_eval(z / c)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln() - ln_n
    };
    // ψ(max/c_hi) = 1 bounds the mean above; ψ(max/c_lo) = n bounds it below
    let mut hi = (max / psi.inverse(1.0)).ln();
    let mut lo = (max / psi.inverse(sample.len() as f64)).ln();
    if ln_mean(lo.exp()) <= 0.0 {
        return Ok(lo.exp());
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if ln_mean(mid.exp()) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}
