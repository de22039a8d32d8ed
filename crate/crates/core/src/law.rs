//! Laws of the iid innovations `ε_j`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    /// `P(ε = 1) = P(ε = -1) = 1/2`.
    Rademacher,
    Gaussian { variance: f64 },
    /// Finitely many atoms `(value, probability)`.
    Discrete { atoms: Vec<(f64, f64)> },
    /// Symmetric Pareto: `|ε| = scale * U^{-1/alpha}` with an independent fair sign.
    /// `E|ε|^p` is finite only for `p < alpha`.
    SymmetricPareto { alpha: f64, scale: f64 },
}

/// A validated, mean-zero innovation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawKind", into = "LawKind")]
pub struct InnovationLaw {
    kind: LawKind,
}

impl TryFrom<LawKind> for InnovationLaw {
    type Error = Error;
    fn try_from(kind: LawKind) -> Result<Self> {
        InnovationLaw::new(kind)
    }
}

impl From<InnovationLaw> for LawKind {
    fn from(law: InnovationLaw) -> LawKind {
        law.kind
    }
}

impl InnovationLaw {
    pub fn new(kind: LawKind) -> Result<Self> {
        match &kind {
            LawKind::Rademacher => {}
            LawKind::Gaussian { variance } => {
                if !(variance.is_finite() && *variance > 0.0) {
                    return invalid("gaussian variance must be positive and finite");
                }
            }
            LawKind::Discrete { atoms } => {
                if atoms.is_empty() {
                    return invalid("discrete law needs at least one atom");
                }
                if atoms
                    .iter()
                    .any(|&(v, p)| !v.is_finite() || !p.is_finite() || p < 0.0)
                {
                    return invalid("discrete law atoms must be finite with nonnegative mass");
                }
                let mass: f64 = atoms.iter().map(|a| a.1).sum();
                if (mass - 1.0).abs() > 1e-12 {
                    return invalid(format!("discrete law masses sum to {mass}, not 1"));
                }
                let mean: f64 = atoms.iter().map(|&(v, p)| v * p).sum();
                if mean.abs() > 1e-12 {
                    return invalid(format!("innovations must be centered, discrete law has mean {mean}"));
                }
                let var: f64 = atoms.iter().map(|&(v, p)| v * v * p).sum();
                if var <= 0.0 {
                    return invalid("discrete law is degenerate at zero");
                }
            }
            LawKind::SymmetricPareto { alpha, scale } => {
                if !(alpha.is_finite() && *alpha > 2.0) {
                    return invalid("symmetric pareto needs alpha > 2 for a finite variance");
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return invalid("symmetric pareto scale must be positive");
                }
            }
        }
        Ok(InnovationLaw { kind })
    }

    pub fn rademacher() -> Self {
        InnovationLaw {
            kind: LawKind::Rademacher,
        }
    }

    pub fn gaussian(variance: f64) -> Result<Self> {
        Self::new(LawKind::Gaussian { variance })
    }

    pub fn standard_gaussian() -> Self {
        InnovationLaw {
            kind: LawKind::Gaussian { variance: 1.0 },
        }
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    /// `E[ε^2]`.
    pub fn variance(&self) -> f64 {
        match &self.kind {
            LawKind::Rademacher => 1.0,
            LawKind::Gaussian { variance } => *variance,
            LawKind::Discrete { atoms } => atoms.iter().map(|&(v, p)| v * v * p).sum(),
            LawKind::SymmetricPareto { alpha, scale } => alpha * scale * scale / (alpha - 2.0),
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `E|ε|^p`, or [`Error::MissingMoment`] when it is infinite.
    pub fn abs_moment(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p > 0.0) {
            return invalid(format!("moment order must be positive and finite, got {p}"));
        }
        match &self.kind {
            LawKind::Rademacher => Ok(1.0),
            LawKind::Gaussian { variance } => {
                let log = 0.5 * p * (2.0 * variance).ln() + ln_gamma((p + 1.0) / 2.0)
                    - 0.5 * PI.ln();
                Ok(log.exp())
            }
            LawKind::Discrete { atoms } => Ok(atoms.iter().map(|&(v, w)| v.abs().powf(p) * w).sum()),
            LawKind::SymmetricPareto { alpha, scale } => {
                if p >= *alpha {
                    Err(Error::MissingMoment { p })
                } else {
                    Ok(alpha * scale.powf(p) / (alpha - p))
                }
            }
        }
    }

    /// Tag identifying the deterministic sampler attached to this law.
    pub fn sampler_id(&self) -> String {
        match &self.kind {
            LawKind::Rademacher => "rademacher/chacha8-v1".into(),
            LawKind::Gaussian { variance } => format!("gaussian(var={variance})/chacha8-box-muller-v1"),
            LawKind::Discrete { atoms } => format!("discrete({} atoms)/chacha8-inverse-cdf-v1", atoms.len()),
            LawKind::SymmetricPareto { alpha, scale } => {
                format!("sym-pareto(alpha={alpha},scale={scale})/chacha8-v1")
            }
        }
    }

    /// `true` when `|ε|` is almost surely bounded.
    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, LawKind::Rademacher | LawKind::Discrete { .. })
    }

    /// Draw one value from two raw 64-bit words. Every law consumes exactly two words,
    /// so a lattice site always maps to a fixed counter window.
    pub(crate) fn sample_from_words(&self, w0: u64, w1: u64) -> f64 {
        match &self.kind {
            LawKind::Rademacher => {
                if w0 >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            LawKind::Gaussian { variance } => {
                let u1 = open_unit(w0);
                let u2 = unit(w1);
                variance.sqrt() * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
            }
            LawKind::Discrete { atoms } => {
                let u = unit(w0);
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                atoms.iter().rev().find(|a| a.1 > 0.0).map(|a| a.0).unwrap_or(0.0)
            }
            LawKind::SymmetricPareto { alpha, scale } => {
                let magnitude = scale * open_unit(w0).powf(-1.0 / alpha);
                if w1 >> 63 == 1 {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }
}

/// Uniform in `[0, 1)` from the top 53 bits.
#[inline]
fn unit(w: u64) -> f64 {
    (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `(0, 1]`.
#[inline]
fn open_unit(w: u64) -> f64 {
    ((w >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}
