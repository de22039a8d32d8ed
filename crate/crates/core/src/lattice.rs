//! Multi-indices on `Z^d`, the coordinatewise partial order, half-space regions
//! and the exact overlap geometry between lattice unit cubes and scaled rectangles.
//!
//! Grid indices follow the 1-based convention of the box `<n>^d = {1..n}^d`;
//! the unit cube attached to `i` is `R_i = ]i_1-1, i_1] x ... x ]i_d-1, i_d]`.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

/// A point of the lattice `Z^d`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(SmallVec<[i64; 4]>);

impl MultiIndex {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        let v: Vec<i64> = coords.into();
        assert!(!v.is_empty(), "MultiIndex needs d >= 1");
        MultiIndex(SmallVec::from_vec(v))
    }

    pub fn from_slice(coords: &[i64]) -> Self {
        assert!(!coords.is_empty(), "MultiIndex needs d >= 1");
        MultiIndex(SmallVec::from_slice(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "MultiIndex needs d >= 1");
        MultiIndex(SmallVec::from_elem(0, dim))
    }

    /// The unit vector `e_axis` (1-based axis).
    pub fn unit(dim: usize, axis: usize) -> Self {
        assert!(axis >= 1 && axis <= dim, "axis {axis} out of range for d={dim}");
        let mut out = Self::zeros(dim);
        out.0[axis - 1] = 1;
        out
    }

    /// `sum_{s in axes} e_s` for 1-based axes.
    pub fn indicator(dim: usize, axes: impl IntoIterator<Item = usize>) -> Self {
        let mut out = Self::zeros(dim);
        for axis in axes {
            out.0[axis - 1] += 1;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Coordinate along a 1-based axis.
    pub fn coord(&self, axis: usize) -> i64 {
        self.0[axis - 1]
    }

    pub fn set_coord(&mut self, axis: usize, value: i64) {
        self.0[axis - 1] = value;
    }

    pub fn check_dim(&self, other: &MultiIndex) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// `self ⪯ other`.
    pub fn leq(&self, other: &MultiIndex) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| a <= b))
    }

    /// `self ≺ other`: strict in every coordinate.
    pub fn lt(&self, other: &MultiIndex) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| a < b))
    }

    /// `self ⪰ other`.
    pub fn geq(&self, other: &MultiIndex) -> Result<bool> {
        other.leq(self)
    }

    /// `self ≻ other`.
    pub fn gt(&self, other: &MultiIndex) -> Result<bool> {
        other.lt(self)
    }

    /// Componentwise minimum `s ∧ t`.
    pub fn meet(&self, other: &MultiIndex) -> Result<MultiIndex> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, i64::min))
    }

    /// Componentwise maximum.
    pub fn join(&self, other: &MultiIndex) -> Result<MultiIndex> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, i64::max))
    }

    /// Unchecked `⪰` for hot loops where dimensions are already known to agree.
    #[inline]
    pub(crate) fn dominates(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    fn zip_with(&self, other: &MultiIndex, f: impl Fn(i64, i64) -> i64) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &MultiIndex {
    type Output = MultiIndex;
    fn sub(self, rhs: &MultiIndex) -> MultiIndex {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &MultiIndex {
    type Output = MultiIndex;
    fn neg(self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|c| -c).collect())
    }
}

/// `Λ_{level,axis} = { i : i_axis >= level }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfSpaceRegion {
    pub axis: usize,
    pub level: i64,
}

impl HalfSpaceRegion {
    pub fn new(axis: usize, level: i64) -> Self {
        HalfSpaceRegion { axis, level }
    }

    pub fn contains(&self, i: &MultiIndex) -> Result<bool> {
        check_axis(self.axis, i.dim())?;
        Ok(i.coord(self.axis) >= self.level)
    }
}

pub(crate) fn check_axis(axis: usize, dim: usize) -> Result<()> {
    if axis == 0 || axis > dim {
        return Err(Error::AxisOutOfRange { axis, dim });
    }
    Ok(())
}

/// Axis-aligned rectangle `[lower, upper]` inside `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Rect {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return invalid(format!(
                "rectangle corners must have equal positive length, got {} and {}",
                lower.len(),
                upper.len()
            ));
        }
        for (s, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
                return invalid(format!("rectangle coordinate outside [0,1] on axis {}", s + 1));
            }
            if lo > hi {
                return invalid(format!("rectangle has lower > upper on axis {}", s + 1));
            }
        }
        Ok(Rect { lower, upper })
    }

    /// The quadrant `[0, t]`.
    pub fn quadrant(t: Vec<f64>) -> Result<Self> {
        Rect::new(vec![0.0; t.len()], t)
    }

    pub fn unit(dim: usize) -> Self {
        Rect {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    /// Lebesgue measure of the intersection, in closed form.
    pub fn intersection_volume(&self, other: &Rect) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        (0..self.dim())
            .map(|s| {
                let lo = self.lower[s].max(other.lower[s]);
                let hi = self.upper[s].min(other.upper[s]);
                (hi - lo).max(0.0)
            })
            .product()
    }

    /// Closed-set membership.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// Length of `]i-1, i] ∩ [n*lo, n*hi]`.
#[inline]
pub(crate) fn axis_overlap(n: usize, lo: f64, hi: f64, i: i64) -> f64 {
    let nf = n as f64;
    let top = (nf * hi).min(i as f64);
    let bottom = (nf * lo).max((i - 1) as f64);
    (top - bottom).max(0.0)
}

/// Per-axis overlap weights for `i_s = 1..n` along every axis of `a`.
pub(crate) fn axis_weight_table(n: usize, a: &Rect) -> Vec<Vec<f64>> {
    (0..a.dim())
        .map(|s| {
            (1..=n as i64)
                .map(|i| axis_overlap(n, a.lower[s], a.upper[s], i))
                .collect()
        })
        .collect()
}

/// `λ(nA ∩ R_i)` for `i ∈ <n>^d`.
pub fn cube_overlap_weight(n: usize, a: &Rect, i: &MultiIndex) -> Result<f64> {
    if i.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: i.dim(),
        });
    }
    if n == 0 || i.coords().iter().any(|&c| c < 1 || c > n as i64) {
        return Err(Error::OutsideBox { index: i.clone(), n });
    }
    Ok((0..a.dim())
        .map(|s| axis_overlap(n, a.lower[s], a.upper[s], i.coords()[s]))
        .product())
}

/// Iterate over all multi-indices in `{lo..=hi}^d` (per-axis bounds), last axis fastest.
pub fn box_indices(lower: &[i64], upper: &[i64]) -> impl Iterator<Item = MultiIndex> {
    let lower = lower.to_vec();
    let upper = upper.to_vec();
    let empty = lower.iter().zip(&upper).any(|(lo, hi)| lo > hi);
    let mut current = if empty { None } else { Some(lower.clone()) };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut axis = lower.len();
        let mut next = out.clone();
        loop {
            if axis == 0 {
                current = None;
                break;
            }
            axis -= 1;
            if next[axis] < upper[axis] {
                next[axis] += 1;
                current = Some(next);
                break;
            }
            next[axis] = lower[axis];
        }
        Some(MultiIndex::new(out))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(c: &[i64]) -> MultiIndex {
        MultiIndex::from_slice(c)
    }

    #[test]
    fn order_examples() {
        assert!(mi(&[1, 2]).leq(&mi(&[1, 3])).unwrap());
        assert!(!mi(&[1, 2]).leq(&mi(&[0, 3])).unwrap());
        assert_eq!(mi(&[1, 5]).meet(&mi(&[2, 3])).unwrap(), mi(&[1, 3]));
        assert!(!mi(&[1, 2]).lt(&mi(&[1, 3])).unwrap());
        assert!(mi(&[0, 2]).lt(&mi(&[1, 3])).unwrap());
        assert!(mi(&[2, 3]).geq(&mi(&[2, 3])).unwrap());
        assert!(!mi(&[2, 3]).gt(&mi(&[2, 3])).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(matches!(
            mi(&[1]).leq(&mi(&[1, 2])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(mi(&[1]).meet(&mi(&[1, 2])).is_err());
    }

    #[test]
    fn order_axioms_exhaustive() {
        let grid: Vec<MultiIndex> = box_indices(&[-1, -1], &[1, 1]).collect();
        assert_eq!(grid.len(), 9);
        for a in &grid {
            assert!(a.leq(a).unwrap());
            for b in &grid {
                if a.leq(b).unwrap() && b.leq(a).unwrap() {
                    assert_eq!(a, b);
                }
                let m = a.meet(b).unwrap();
                assert!(m.leq(a).unwrap() && m.leq(b).unwrap());
                // greatest lower bound
                for c in &grid {
                    if c.leq(a).unwrap() && c.leq(b).unwrap() {
                        assert!(c.leq(&m).unwrap());
                    }
                    if a.leq(b).unwrap() && b.leq(c).unwrap() {
                        assert!(a.leq(c).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn half_space_membership() {
        assert!(HalfSpaceRegion::new(1, 1).contains(&mi(&[1, -7])).unwrap());
        assert!(!HalfSpaceRegion::new(2, 2).contains(&mi(&[9, 1])).unwrap());
        assert!(HalfSpaceRegion::new(1, 0).contains(&mi(&[0, 0])).unwrap());
        assert!(matches!(
            HalfSpaceRegion::new(3, 0).contains(&mi(&[0, 0])),
            Err(Error::AxisOutOfRange { axis: 3, dim: 2 })
        ));
        assert!(HalfSpaceRegion::new(0, 0).contains(&mi(&[0, 0])).is_err());
    }

    #[test]
    fn overlap_examples() {
        let a = Rect::quadrant(vec![0.75, 0.5]).unwrap();
        assert_eq!(cube_overlap_weight(2, &a, &mi(&[2, 1])).unwrap(), 0.5);
        let a = Rect::unit(2);
        assert_eq!(cube_overlap_weight(4, &a, &mi(&[3, 2])).unwrap(), 1.0);
        let a = Rect::new(vec![0.5, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(cube_overlap_weight(2, &a, &mi(&[1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn overlap_rejects_outside_box() {
        let a = Rect::unit(2);
        assert!(matches!(
            cube_overlap_weight(2, &a, &mi(&[0, 1])),
            Err(Error::OutsideBox { .. })
        ));
        assert!(cube_overlap_weight(2, &a, &mi(&[3, 1])).is_err());
        assert!(cube_overlap_weight(2, &a, &mi(&[1])).is_err());
    }

    #[test]
    fn rect_validation() {
        assert!(Rect::new(vec![0.5], vec![0.25]).is_err());
        assert!(Rect::new(vec![-0.1], vec![0.25]).is_err());
        assert!(Rect::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!((Rect::new(vec![0.25, 0.5], vec![0.75, 1.0]).unwrap().volume() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn box_iteration_order() {
        let v: Vec<_> = box_indices(&[1, 1], &[2, 3]).collect();
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], mi(&[1, 1]));
        assert_eq!(v[1], mi(&[1, 2]));
        assert_eq!(v[5], mi(&[2, 3]));
        assert_eq!(box_indices(&[1], &[0]).count(), 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn coord() -> impl Strategy<Value = f64> {
            (0u32..=64).prop_map(|k| k as f64 / 64.0)
        }

        proptest! {
            #[test]
            fn weights_are_additive(n in 1usize..9, lo in coord(), mid in coord(), hi in coord(), y0 in coord(), y1 in coord()) {
                let mut xs = [lo, mid, hi];
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let (y0, y1) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
                let left = Rect::new(vec![xs[0], y0], vec![xs[1], y1]).unwrap();
                let right = Rect::new(vec![xs[1], y0], vec![xs[2], y1]).unwrap();
                let whole = Rect::new(vec![xs[0], y0], vec![xs[2], y1]).unwrap();
                for i in box_indices(&[1, 1], &[n as i64, n as i64]) {
                    let sum = cube_overlap_weight(n, &left, &i).unwrap() + cube_overlap_weight(n, &right, &i).unwrap();
                    prop_assert!((sum - cube_overlap_weight(n, &whole, &i).unwrap()).abs() < 1e-12);
                }
            }

            #[test]
            fn total_mass(n in 1usize..9, a in coord(), b in coord(), c in coord(), e in coord()) {
                let rect = Rect::new(vec![a.min(b), c.min(e)], vec![a.max(b), c.max(e)]).unwrap();
                let total: f64 = box_indices(&[1, 1], &[n as i64, n as i64])
                    .map(|i| cube_overlap_weight(n, &rect, &i).unwrap())
                    .sum();
                prop_assert!((total - (n * n) as f64 * rect.volume()).abs() < 1e-9);
            }
        }
    }
}
