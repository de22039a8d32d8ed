//! Exact algebra on the first chaos: finite linear combinations `F = Σ_j c_j ε_{-j}`
//! of iid centered innovations.
//!
//! On this span the shift `U^j` relabels coefficients and a conditional expectation
//! onto an innovation-generated σ-algebra keeps exactly the coefficients of the
//! innovations it contains. With `M = σ(ε_i : i ⪯ 0)`:
//!
//! * `T^j M` contains `ε_{-l}` iff `l ⪰ j`;
//! * the half-space algebra `F_{k,s}` contains `ε_{-l}` iff `l_s ≥ k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::law::InnovationLaw;
use crate::lattice::{check_axis, MultiIndex};
use crate::rng::{substream, InnovationStream};

/// A conditioning σ-algebra generated by innovations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaAlgebraSpec {
    /// `T^shift M`; `shift = 0` is `M` itself.
    ShiftedPast { shift: MultiIndex },
    /// `F_{level,axis}`, generated by `ε_{-l}` with `l_axis ≥ level`.
    HalfSpace { axis: usize, level: i64 },
}

impl SigmaAlgebraSpec {
    pub fn shifted_past(shift: MultiIndex) -> Self {
        SigmaAlgebraSpec::ShiftedPast { shift }
    }

    pub fn past(dim: usize) -> Self {
        SigmaAlgebraSpec::ShiftedPast {
            shift: MultiIndex::zeros(dim),
        }
    }

    /// `T_s^k M`.
    pub fn axis_past(dim: usize, axis: usize, k: i64) -> Self {
        let mut shift = MultiIndex::zeros(dim);
        shift.set_coord(axis, k);
        SigmaAlgebraSpec::ShiftedPast { shift }
    }

    pub fn half_space(axis: usize, level: i64) -> Self {
        SigmaAlgebraSpec::HalfSpace { axis, level }
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self {
            SigmaAlgebraSpec::ShiftedPast { shift } => {
                if shift.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: shift.dim(),
                    });
                }
            }
            SigmaAlgebraSpec::HalfSpace { axis, .. } => check_axis(*axis, dim)?,
        }
        Ok(())
    }

    /// Whether `ε_{-l}` is measurable w.r.t. this algebra.
    #[inline]
    fn keeps(&self, l: &MultiIndex) -> bool {
        match self {
            SigmaAlgebraSpec::ShiftedPast { shift } => l.dominates(shift),
            SigmaAlgebraSpec::HalfSpace { axis, level } => l.coord(*axis) >= *level,
        }
    }
}

/// `Σ_j c_j ε_{-j}` with finitely many nonzero coefficients. Zero coefficients are
/// never stored; the map is ordered lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosElement {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl ChaosElement {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "d must be at least 1");
        ChaosElement {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    /// `c ε_{-j}`.
    pub fn term(j: MultiIndex, c: f64) -> Self {
        let mut out = Self::zero(j.dim());
        if c != 0.0 {
            out.coeffs.insert(j, c);
        }
        out
    }

    /// `ε_{-j}`.
    pub fn innovation(j: MultiIndex) -> Self {
        Self::term(j, 1.0)
    }

    /// Builds an element from `(index, coefficient)` pairs; repeated indices add up.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        let mut out = Self::zero(dim);
        for (j, c) in entries {
            if j.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: j.dim(),
                });
            }
            if !c.is_finite() {
                return invalid(format!("non-finite coefficient at {j}"));
            }
            out.add_at(j, c);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, j: &MultiIndex) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.coeffs.iter().map(|(k, v)| (k, *v))
    }

    pub fn indices(&self) -> impl Iterator<Item = &MultiIndex> + '_ {
        self.coeffs.keys()
    }

    fn add_at(&mut self, j: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.coeffs.entry(j);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
        }
    }

    fn check_same_dim(&self, other_dim: usize) -> Result<()> {
        if self.dim != other_dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other_dim,
            });
        }
        Ok(())
    }

    /// `U^j F`: the coefficient of the output at `l` is the input coefficient at `l + j`.
    pub fn shift(&self, j: &MultiIndex) -> Result<ChaosElement> {
        self.check_same_dim(j.dim())?;
        Ok(ChaosElement {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|(l, c)| (l - j, *c)).collect(),
        })
    }

    /// `U_axis^k F`.
    pub fn shift_axis(&self, axis: usize, k: i64) -> Result<ChaosElement> {
        check_axis(axis, self.dim)?;
        let mut j = MultiIndex::zeros(self.dim);
        j.set_coord(axis, k);
        self.shift(&j)
    }

    /// `E[F | G]`.
    pub fn project(&self, algebra: &SigmaAlgebraSpec) -> Result<ChaosElement> {
        algebra.check(self.dim)?;
        Ok(ChaosElement {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(l, _)| algebra.keeps(l))
                .map(|(l, c)| (l.clone(), *c))
                .collect(),
        })
    }

    /// `a F + b G`, dropping exact zeros.
    pub fn combine(a: f64, f: &ChaosElement, b: f64, g: &ChaosElement) -> Result<ChaosElement> {
        f.check_same_dim(g.dim)?;
        let mut out = ChaosElement::zero(f.dim);
        for (l, c) in &f.coeffs {
            out.add_at(l.clone(), a * c);
        }
        for (l, c) in &g.coeffs {
            out.add_at(l.clone(), b * c);
        }
        Ok(out)
    }

    pub fn add(&self, other: &ChaosElement) -> Result<ChaosElement> {
        Self::combine(1.0, self, 1.0, other)
    }

    pub fn sub(&self, other: &ChaosElement) -> Result<ChaosElement> {
        Self::combine(1.0, self, -1.0, other)
    }

    pub fn scale(&self, a: f64) -> ChaosElement {
        let mut out = ChaosElement::zero(self.dim);
        for (l, c) in &self.coeffs {
            out.add_at(l.clone(), a * c);
        }
        out
    }

    /// `Σ_j c_j^2`.
    pub fn sum_of_squares(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }

    /// `Σ_j c_j`.
    pub fn coefficient_sum(&self) -> f64 {
        self.coeffs.values().sum()
    }

    /// `‖F‖_2 = σ (Σ c_j^2)^{1/2}`, exact by orthogonality of distinct innovations.
    pub fn l2_norm(&self, law: &InnovationLaw) -> f64 {
        law.std_dev() * self.sum_of_squares().sqrt()
    }

    /// Indices `l` with `l ⋡ base`, i.e. innovations outside `T^base M`.
    pub fn non_measurable_indices(&self, base: &MultiIndex) -> Result<Vec<MultiIndex>> {
        self.check_same_dim(base.dim())?;
        Ok(self
            .coeffs
            .keys()
            .filter(|l| !l.dominates(base))
            .cloned()
            .collect())
    }

    /// `true` iff `F` is `T^base M`-measurable.
    pub fn is_measurable(&self, base: &MultiIndex) -> Result<bool> {
        Ok(self.non_measurable_indices(base)?.is_empty())
    }

    /// Largest coordinate along `axis` over the support, if any.
    pub fn max_coord(&self, axis: usize) -> Option<i64> {
        self.coeffs.keys().map(|l| l.coord(axis)).max()
    }

    /// `max_j |c_j - c'_j|`.
    pub fn max_abs_diff(&self, other: &ChaosElement) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, c) in &self.coeffs {
            worst = worst.max((c - other.coeff(l)).abs());
        }
        for (l, c) in &other.coeffs {
            if !self.coeffs.contains_key(l) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    /// Evaluates `F` on a realization of the innovation field.
    pub fn evaluate(&self, innovations: &InnovationStream) -> f64 {
        self.coeffs
            .iter()
            .map(|(l, c)| c * innovations.value_at(&-l))
            .sum()
    }

    /// Monte Carlo estimate of `‖F‖_p` with a normal-approximation confidence
    /// interval and the two raw Rosenthal bracket quantities.
    pub fn lp_norm_estimate(
        &self,
        law: &InnovationLaw,
        p: f64,
        replicas: usize,
        seed: u64,
    ) -> Result<LpNormEstimate> {
        if !(p.is_finite() && p >= 1.0) {
            return invalid(format!("p must be >= 1, got {p}"));
        }
        if replicas < MIN_REPLICAS {
            return invalid(format!("at least {MIN_REPLICAS} replicas are required, got {replicas}"));
        }
        let pth = law.abs_moment(p)?;
        let rosenthal = RosenthalBracket {
            variance_term: (law.variance() * self.sum_of_squares()).powf(p / 2.0),
            moment_term: self.coeffs.values().map(|c| c.abs().powf(p)).sum::<f64>() * pth,
        };
        if p == 2.0 {
            let exact = self.l2_norm(law);
            return Ok(LpNormEstimate {
                p,
                replicas,
                estimate: exact,
                std_error: 0.0,
                ci_low: exact,
                ci_high: exact,
                exact: true,
                rosenthal,
            });
        }
        let draws: Vec<f64> = (0..replicas as u64)
            .map(|r| {
                let stream = InnovationStream::new(law.clone(), seed, substream(r, 0));
                self.evaluate(&stream).abs().powf(p)
            })
            .collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se_mean = (var / n).sqrt();
        let estimate = mean.powf(1.0 / p);
        // delta method for g(m) = m^{1/p}
        let std_error = if mean > 0.0 {
            se_mean * mean.powf(1.0 / p - 1.0) / p
        } else {
            0.0
        };
        let z = 1.959_963_984_540_054;
        Ok(LpNormEstimate {
            p,
            replicas,
            estimate,
            std_error,
            ci_low: (mean - z * se_mean).max(0.0).powf(1.0 / p),
            ci_high: (mean + z * se_mean).powf(1.0 / p),
            exact: false,
            rosenthal,
        })
    }
}

pub const MIN_REPLICAS: usize = 100;

/// `(Σ c_j^2 E ε^2)^{p/2}` and `Σ |c_j|^p E|ε|^p`; `E|F|^p` lies between their sum
/// divided by and multiplied by an unspecified constant depending on `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RosenthalBracket {
    pub variance_term: f64,
    pub moment_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpNormEstimate {
    pub p: f64,
    pub replicas: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `true` when computed in closed form (p = 2).
    pub exact: bool,
    pub rosenthal: RosenthalBracket,
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    index: MultiIndex,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct ChaosRepr {
    d: usize,
    entries: Vec<EntryRepr>,
}

impl Serialize for ChaosElement {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ChaosRepr {
            d: self.dim,
            entries: self
                .coeffs
                .iter()
                .map(|(index, coeff)| EntryRepr {
                    index: index.clone(),
                    coeff: *coeff,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChaosElement {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ChaosRepr::deserialize(deserializer)?;
        if repr.d == 0 {
            return Err(D::Error::custom("d must be at least 1"));
        }
        let mut coeffs = BTreeMap::new();
        for e in repr.entries {
            if e.index.dim() != repr.d {
                return Err(D::Error::custom(format!(
                    "index {} has dimension {}, expected {}",
                    e.index,
                    e.index.dim(),
                    repr.d
                )));
            }
            if e.coeff == 0.0 || !e.coeff.is_finite() {
                return Err(D::Error::custom(format!(
                    "coefficient at {} must be finite and nonzero",
                    e.index
                )));
            }
            if coeffs.insert(e.index.clone(), e.coeff).is_some() {
                return Err(D::Error::custom(format!("duplicate index {}", e.index)));
            }
        }
        Ok(ChaosElement { dim: repr.d, coeffs })
    }
}
