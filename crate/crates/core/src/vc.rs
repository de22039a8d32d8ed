//! VC indices, the pseudo-metric `ρ(A,B) = sqrt(λ(AΔB))`, covering numbers and
//! entropy integrals for classes of rectangles in `[0,1]^d`.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::Rect;

/// Largest number of points handled by [`picked_count`].
pub const MAX_POINTS: usize = 63;
/// Largest number of grid members enumerated for covering numbers.
pub const MAX_MEMBERS: usize = 5_000_000;
const MAX_LEVEL: u32 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetClassKind {
    /// `{[0,t] : t ∈ [0,1]^d}`.
    Quadrants,
    /// `{[s,t] : s ⪯ t}`.
    Boxes,
    /// A finite list of rectangles, optionally together with the empty set.
    Explicit { members: Vec<Rect>, include_empty: bool },
}

/// A class of subsets of `[0,1]^d`; `level` sets the dyadic parameter grid
/// `{0, 2^{-level}, ..., 1}` used when the class is enumerated for covering numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetClass {
    pub kind: SetClassKind,
    pub dim: usize,
    pub level: u32,
}

impl SetClass {
    pub fn quadrants(dim: usize, level: u32) -> Result<Self> {
        Self::build(SetClassKind::Quadrants, dim, level)
    }

    pub fn boxes(dim: usize, level: u32) -> Result<Self> {
        Self::build(SetClassKind::Boxes, dim, level)
    }

    pub fn explicit(dim: usize, members: Vec<Rect>, include_empty: bool) -> Result<Self> {
        if members.iter().any(|r| r.dim() != dim) {
            return invalid("explicit members must have dimension d");
        }
        Self::build(SetClassKind::Explicit { members, include_empty }, dim, 0)
    }

    fn build(kind: SetClassKind, dim: usize, level: u32) -> Result<Self> {
        if dim == 0 {
            return invalid("d must be at least 1");
        }
        if level > MAX_LEVEL {
            return invalid(format!("grid level must be at most {MAX_LEVEL}"));
        }
        Ok(SetClass { kind, dim, level })
    }

    /// Short label such as `Q2` or `Q'1`.
    pub fn label(&self) -> String {
        match self.kind {
            SetClassKind::Quadrants => format!("Q{}", self.dim),
            SetClassKind::Boxes => format!("Q'{}", self.dim),
            SetClassKind::Explicit { .. } => format!("explicit{}", self.dim),
        }
    }

    /// Sup over the class of the `ρ`-distance to the nearest grid member.
    pub fn discretization_radius(&self) -> f64 {
        discretization_radius(&self.kind, self.dim, self.level)
    }

    /// Members on the parameter grid, in lexicographic parameter order.
    pub fn grid_members(&self) -> Result<Vec<Rect>> {
        let m = 1usize << self.level;
        let step = 1.0 / m as f64;
        match &self.kind {
            SetClassKind::Explicit { members, .. } => Ok(members.clone()),
            SetClassKind::Quadrants => {
                let per_axis = m + 1;
                let total = checked_pow(per_axis, self.dim)?;
                let mut out = Vec::with_capacity(total);
                let mut digits = vec![0usize; self.dim];
                for _ in 0..total {
                    out.push(Rect::quadrant(digits.iter().map(|&k| k as f64 * step).collect())?);
                    advance(&mut digits, per_axis);
                }
                Ok(out)
            }
            SetClassKind::Boxes => {
                let pairs: Vec<(f64, f64)> = (0..=m)
                    .flat_map(|a| (a..=m).map(move |b| (a as f64 * step, b as f64 * step)))
                    .collect();
                let total = checked_pow(pairs.len(), self.dim)?;
                let mut out = Vec::with_capacity(total);
                let mut digits = vec![0usize; self.dim];
                for _ in 0..total {
                    let lower = digits.iter().map(|&k| pairs[k].0).collect();
                    let upper = digits.iter().map(|&k| pairs[k].1).collect();
                    out.push(Rect::new(lower, upper)?);
                    advance(&mut digits, pairs.len());
                }
                Ok(out)
            }
        }
    }
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    match base.checked_pow(exp as u32) {
        Some(n) if n <= MAX_MEMBERS => Ok(n),
        _ => invalid(format!("parameter grid exceeds {MAX_MEMBERS} members; lower the level")),
    }
}

/// Odometer increment, last digit fastest.
fn advance(digits: &mut [usize], radix: usize) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return;
        }
        *d = 0;
    }
}

fn discretization_radius(kind: &SetClassKind, dim: usize, level: u32) -> f64 {
    let h = 0.5 / (1u64 << level) as f64;
    match kind {
        SetClassKind::Quadrants => (1.0 - (1.0 - h).powi(dim as i32)).sqrt(),
        SetClassKind::Boxes => (1.0 - (1.0 - 2.0 * h).max(0.0).powi(dim as i32)).sqrt(),
        SetClassKind::Explicit { .. } => 0.0,
    }
}

/// `sqrt(λ(A) + λ(B) − 2λ(A∩B))`.
pub fn rho(a: &Rect, b: &Rect) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(rho_sq(a.volume(), b.volume(), a.intersection_volume(b)).sqrt())
}

fn rho_sq(va: f64, vb: f64, inter: f64) -> f64 {
    (va + vb - 2.0 * inter).max(0.0)
}

fn check_points(class: &SetClass, points: &[Vec<f64>]) -> Result<()> {
    if points.len() > MAX_POINTS {
        return invalid(format!("at most {MAX_POINTS} points are supported"));
    }
    for x in points {
        if x.len() != class.dim {
            return Err(Error::DimensionMismatch {
                expected: class.dim,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return invalid("points must lie in [0,1]^d");
        }
    }
    for (i, x) in points.iter().enumerate() {
        if points[..i].contains(x) {
            return invalid(format!("duplicate point {x:?}"));
        }
    }
    Ok(())
}

/// Per-axis masks of the subsets picked out on one coordinate.
fn axis_masks(kind: &SetClassKind, points: &[Vec<f64>], axis: usize) -> Vec<u64> {
    let mut coords: Vec<f64> = points.iter().map(|x| x[axis]).collect();
    coords.sort_by(f64::total_cmp);
    coords.dedup();
    let mask_of = |keep: &dyn Fn(f64) -> bool| -> u64 {
        points
            .iter()
            .enumerate()
            .filter(|(_, x)| keep(x[axis]))
            .fold(0u64, |m, (i, _)| m | 1 << i)
    };
    match kind {
        SetClassKind::Quadrants => std::iter::once(0.0)
            .chain(coords.iter().copied())
            .map(|t| mask_of(&|v| v <= t))
            .collect(),
        SetClassKind::Boxes => {
            let mut out = Vec::new();
            for (i, &lo) in coords.iter().enumerate() {
                for &hi in &coords[i..] {
                    out.push(mask_of(&|v| lo <= v && v <= hi));
                }
            }
            out
        }
        SetClassKind::Explicit { .. } => unreachable!("explicit classes are not axis-separable"),
    }
}

/// Calls `visit` on the mask of every subset picked out by the class; stops early
/// when `visit` returns `false`.
fn for_each_pick(class: &SetClass, points: &[Vec<f64>], visit: &mut dyn FnMut(u64) -> bool) {
    match &class.kind {
        SetClassKind::Explicit { members, include_empty } => {
            if *include_empty && !visit(0) {
                return;
            }
            for r in members {
                let mask = points
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| r.contains_point(x))
                    .fold(0u64, |m, (i, _)| m | 1 << i);
                if !visit(mask) {
                    return;
                }
            }
        }
        kind => {
            if points.is_empty() {
                // every member picks the empty set
                visit(0);
                return;
            }
            if matches!(kind, SetClassKind::Boxes) && !visit(0) {
                return;
            }
            let lists: Vec<Vec<u64>> = (0..class.dim).map(|s| axis_masks(kind, points, s)).collect();
            let full = if points.len() == 64 { u64::MAX } else { (1u64 << points.len()) - 1 };
            product_masks(&lists, 0, full, visit);
        }
    }
}

fn product_masks(lists: &[Vec<u64>], axis: usize, acc: u64, visit: &mut dyn FnMut(u64) -> bool) -> bool {
    if axis == lists.len() {
        return visit(acc);
    }
    for &m in &lists[axis] {
        if !product_masks(lists, axis + 1, acc & m, visit) {
            return false;
        }
    }
    true
}

/// `#{C ∩ {x_1, ..., x_n} : C ∈ class}`, exactly.
pub fn picked_count(class: &SetClass, points: &[Vec<f64>]) -> Result<usize> {
    check_points(class, points)?;
    let mut seen = HashSet::new();
    for_each_pick(class, points, &mut |m| {
        seen.insert(m);
        true
    });
    Ok(seen.len())
}

/// Whether every subset of `points` is picked out.
pub fn shatters(class: &SetClass, points: &[Vec<f64>]) -> Result<bool> {
    check_points(class, points)?;
    Ok(shatters_unchecked(class, points))
}

fn shatters_unchecked(class: &SetClass, points: &[Vec<f64>]) -> bool {
    let n = points.len();
    if n > 24 {
        let mut seen = HashSet::new();
        for_each_pick(class, points, &mut |m| {
            seen.insert(m);
            true
        });
        return seen.len() as u128 == 1u128 << n;
    }
    let target = 1usize << n;
    let mut seen = vec![false; target];
    let mut count = 0;
    for_each_pick(class, points, &mut |m| {
        let slot = &mut seen[m as usize];
        if !*slot {
            *slot = true;
            count += 1;
        }
        count < target
    });
    count == target
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcSearch {
    pub max_n: usize,
    /// Maximum number of point configurations examined.
    pub budget: usize,
}

impl Default for VcSearch {
    fn default() -> Self {
        VcSearch {
            max_n: 8,
            budget: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcResult {
    pub class: String,
    /// `V(C)` when `exact`, otherwise a certified lower bound.
    pub index: usize,
    pub exact: bool,
    /// Lexicographically first shattered set of size `index − 1` found.
    pub witness: Vec<Vec<f64>>,
    pub configurations: usize,
}

/// Canonical candidate points. For quadrants and boxes only per-axis order types
/// matter, so `n`-point sets on the rank grid `{1..n}^d / (n+1)` exhaust every
/// configuration. For explicit classes one point per cell of the boundary
/// arrangement suffices.
fn candidate_points(class: &SetClass, n: usize) -> Vec<Vec<f64>> {
    let axis_values: Vec<Vec<f64>> = match &class.kind {
        SetClassKind::Explicit { members, .. } => (0..class.dim)
            .map(|s| {
                let mut b: Vec<f64> = members
                    .iter()
                    .flat_map(|r| [r.lower()[s], r.upper()[s]])
                    .chain([0.0, 1.0])
                    .collect();
                b.sort_by(f64::total_cmp);
                b.dedup();
                let mut v = b.clone();
                v.extend(b.windows(2).map(|w| 0.5 * (w[0] + w[1])));
                v.sort_by(f64::total_cmp);
                v
            })
            .collect(),
        _ => vec![(1..=n).map(|r| r as f64 / (n + 1) as f64).collect(); class.dim],
    };
    let radix: Vec<usize> = axis_values.iter().map(Vec::len).collect();
    let total: usize = radix.iter().product();
    let mut digits = vec![0usize; class.dim];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        out.push(digits.iter().enumerate().map(|(s, &k)| axis_values[s][k]).collect());
        for s in (0..class.dim).rev() {
            digits[s] += 1;
            if digits[s] < radix[s] {
                break;
            }
            digits[s] = 0;
        }
    }
    out
}

enum SizeOutcome {
    Shattered(Vec<Vec<f64>>),
    NoneShattered,
    BudgetExhausted,
}

fn search_size(class: &SetClass, n: usize, budget: &mut usize) -> SizeOutcome {
    let grid = candidate_points(class, n);
    if n > grid.len() {
        return SizeOutcome::NoneShattered;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        if *budget == 0 {
            return SizeOutcome::BudgetExhausted;
        }
        *budget -= 1;
        let pts: Vec<Vec<f64>> = idx.iter().map(|&i| grid[i].clone()).collect();
        if shatters_unchecked(class, &pts) {
            return SizeOutcome::Shattered(pts);
        }
        // next combination in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return SizeOutcome::NoneShattered;
            }
            i -= 1;
            if idx[i] < grid.len() - n + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `V(C) = inf{n : no n-point set is shattered}`, by exhaustive search over
/// canonical configurations of increasing size.
pub fn vc_index(class: &SetClass, search: VcSearch) -> Result<VcResult> {
    if search.max_n > 20 {
        return invalid("max_n must be at most 20");
    }
    let mut budget = search.budget;
    let mut witness = Vec::new();
    for n in 0..=search.max_n {
        match search_size(class, n, &mut budget) {
            SizeOutcome::Shattered(pts) => witness = pts,
            outcome => {
                return Ok(VcResult {
                    class: class.label(),
                    index: n,
                    exact: matches!(outcome, SizeOutcome::NoneShattered),
                    witness,
                    configurations: search.budget - budget,
                })
            }
        }
    }
    Ok(VcResult {
        class: class.label(),
        index: search.max_n + 1,
        exact: false,
        witness,
        configurations: search.budget - budget,
    })
}

/// Size of a greedy net in which every member lies within `radius` of a center and
/// centers are pairwise more than `radius` apart.
fn greedy_net(members: &[Rect], vols: &[f64], radius: f64) -> usize {
    let r2 = radius * radius;
    let tol = 1e-12;
    // ρ² ≥ |λ(A) − λ(B)|, so only neighbouring volume buckets can hold a nearby center
    let width = r2.max(1e-9);
    let buckets = (1.0 / width).floor() as usize + 2;
    let mut table: Vec<Vec<usize>> = vec![Vec::new(); buckets];
    let mut centers = 0;
    for (i, m) in members.iter().enumerate() {
        let b = ((vols[i] / width) as usize).min(buckets - 1);
        let lo = b.saturating_sub(1);
        let hi = (b + 1).min(buckets - 1);
        let covered = (lo..=hi).any(|k| {
            table[k]
                .iter()
                .any(|&c| rho_sq(vols[i], vols[c], m.intersection_volume(&members[c])) <= r2 + tol)
        });
        if !covered {
            table[b].push(i);
            centers += 1;
        }
    }
    centers
}

/// Greedy `ε`-net size on the parameter grid, an upper bound on `N(A, ρ, ε)`.
pub fn covering_number(class: &SetClass, eps: f64) -> Result<usize> {
    let (members, vols) = prepared_members(class, &[eps])?;
    Ok(greedy_net(&members, &vols, eps))
}

/// Lower bound on `N(A, ρ, ε)` from a set of members pairwise more than `2ε` apart.
pub fn packing_lower_bound(class: &SetClass, eps: f64) -> Result<usize> {
    let (members, vols) = prepared_members(class, &[eps])?;
    Ok(greedy_net(&members, &vols, 2.0 * eps))
}

fn prepared_members(class: &SetClass, epsilons: &[f64]) -> Result<(Vec<Rect>, Vec<f64>)> {
    let delta = class.discretization_radius();
    for &eps in epsilons {
        if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
            return invalid(format!("epsilon must lie in (0, 1], got {eps}"));
        }
        if delta >= eps / 4.0 {
            let required = (class.level..=MAX_LEVEL)
                .find(|&l| discretization_radius(&class.kind, class.dim, l) < eps / 4.0)
                .unwrap_or(MAX_LEVEL);
            return invalid(format!(
                "epsilon {eps} is too small for grid level {} (discretization radius {delta:.4}); \
                 level {required} is required",
                class.level
            ));
        }
    }
    let members = class.grid_members()?;
    if members.is_empty() {
        return invalid("class has no rectangle members");
    }
    let vols = members.iter().map(Rect::volume).collect();
    Ok((members, vols))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyOptions {
    pub epsilons: Vec<f64>,
    /// Exponent of the `∫ N^{1/p}` form.
    pub p: f64,
    /// Range of `ε` used to fit the covering exponent and the envelope constant;
    /// the whole grid when absent.
    pub fit_range: Option<(f64, f64)>,
    /// VC index to use in the envelope; computed by exhaustive search when absent.
    pub vc_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringRow {
    pub epsilon: f64,
    /// Monotone greedy-net upper bound.
    pub upper: usize,
    /// Monotone packing lower bound.
    pub lower: usize,
    /// `ln upper`.
    pub entropy: f64,
    /// `K V (4e)^V ε^{−2(V−1)}` at the fitted `K`.
    pub envelope: f64,
    pub below_envelope: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub class: String,
    pub dim: usize,
    pub level: u32,
    pub discretization_radius: f64,
    pub rows: Vec<CoveringRow>,
    pub vc_index: usize,
    /// `2(V − 1)`.
    pub envelope_exponent: f64,
    pub envelope_constant: f64,
    pub envelope_holds: bool,
    pub fit_range: (f64, f64),
    /// Least-squares slope of `ln N` against `ln(1/ε)` on the fit range.
    pub fitted_exponent: f64,
    /// `∫ sqrt(H)` over the grid by trapezoid.
    pub dudley_grid: f64,
    /// `∫_0^{ε_min} sqrt(ln envelope)`.
    pub dudley_tail: f64,
    pub dudley_integral: f64,
    pub dudley_finite: bool,
    pub p: f64,
    pub lp_grid: f64,
    /// `∫_0^{ε_min} envelope^{1/p}`, absent when it diverges (`p ≤ 2(V−1)`).
    pub lp_tail: Option<f64>,
    pub lp_integral: Option<f64>,
    pub lp_finite: bool,
}

impl CoveringReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["epsilon", "upper", "lower", "entropy", "envelope", "below_envelope"])
            .map_err(io_error)?;
        for r in &self.rows {
            out.write_record([
                r.epsilon.to_string(),
                r.upper.to_string(),
                r.lower.to_string(),
                format!("{:e}", r.entropy),
                format!("{:e}", r.envelope),
                r.below_envelope.to_string(),
            ])
            .map_err(io_error)?;
        }
        out.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

fn io_error(e: csv::Error) -> Error {
    Error::InvalidInput(e.to_string())
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `∫_0^{e0} sqrt(max(0, a + b ln(1/ε))) dε = ∫_{ln(1/e0)}^∞ sqrt(max(0, a + b u)) e^{−u} du`.
fn log_sqrt_tail(a: f64, b: f64, e0: f64) -> f64 {
    let u0 = -e0.ln();
    let steps = 8000;
    let span = 80.0;
    let h = span / steps as f64;
    let f = |u: f64| (a + b * u).max(0.0).sqrt() * (-u).exp();
    let mut s = f(u0) + f(u0 + span);
    for k in 1..steps {
        s += f(u0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Covering numbers on an `ε` grid together with the Dudley integral `∫₀¹ sqrt(H)`,
/// the `∫₀¹ N^{1/p}` form, and the envelope `K V (4e)^V ε^{−2(V−1)}`.
pub fn entropy_integral(class: &SetClass, opts: &EntropyOptions) -> Result<CoveringReport> {
    if !(opts.p.is_finite() && opts.p > 0.0) {
        return invalid("p must be positive");
    }
    let mut eps: Vec<f64> = opts.epsilons.clone();
    if eps.is_empty() {
        return invalid("epsilon grid is empty");
    }
    eps.push(1.0);
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let (members, vols) = prepared_members(class, &eps)?;
    let v = match opts.vc_index {
        Some(v) => v,
        None => {
            let r = vc_index(class, VcSearch::default())?;
            if !r.exact {
                return Err(Error::Unsupported(format!(
                    "VC index of {} could not be certified (lower bound {})",
                    r.class, r.index
                )));
            }
            r.index
        }
    };
    let raw: Vec<(usize, usize)> = eps
        .par_iter()
        .map(|&e| (greedy_net(&members, &vols, e), greedy_net(&members, &vols, 2.0 * e)))
        .collect();
    // an ε'-net is an ε-net for ε ≥ ε'; a 2ε'-packing is a 2ε-packing for ε ≤ ε'
    let mut upper: Vec<usize> = raw.iter().map(|r| r.0).collect();
    for i in 1..upper.len() {
        upper[i] = upper[i].min(upper[i - 1]);
    }
    let mut lower: Vec<usize> = raw.iter().map(|r| r.1).collect();
    for i in (0..lower.len().saturating_sub(1)).rev() {
        lower[i] = lower[i].max(lower[i + 1]);
    }
    let lower: Vec<usize> = lower.iter().zip(&upper).map(|(l, u)| *l.min(u)).collect();

    let fit_range = opts.fit_range.unwrap_or((eps[0], 1.0));
    let in_fit: Vec<usize> = (0..eps.len())
        .filter(|&i| eps[i] >= fit_range.0 - 1e-12 && eps[i] <= fit_range.1 + 1e-12)
        .collect();
    if in_fit.len() < 2 {
        return invalid("fit range must contain at least two grid points");
    }
    let xs: Vec<f64> = in_fit.iter().map(|&i| -eps[i].ln()).collect();
    let ys: Vec<f64> = in_fit.iter().map(|&i| (upper[i] as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let fitted_exponent = sxy / sxx;

    let vf = v as f64;
    let exponent = 2.0 * (vf - 1.0);
    let shape = |e: f64| vf * (4.0 * std::f64::consts::E).powf(vf) * e.powf(-exponent);
    let envelope_constant = in_fit
        .iter()
        .map(|&i| upper[i] as f64 / shape(eps[i]))
        .fold(0.0, f64::max);
    let rows: Vec<CoveringRow> = eps
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let envelope = envelope_constant * shape(e);
            CoveringRow {
                epsilon: e,
                upper: upper[i],
                lower: lower[i],
                entropy: (upper[i] as f64).ln(),
                envelope,
                below_envelope: upper[i] as f64 <= envelope * (1.0 + 1e-12),
            }
        })
        .collect();
    let envelope_holds = rows.iter().all(|r| r.below_envelope);

    let e0 = eps[0];
    let sqrt_h: Vec<f64> = rows.iter().map(|r| r.entropy.sqrt()).collect();
    let dudley_grid = trapezoid(&eps, &sqrt_h);
    let a = (envelope_constant * vf * (4.0 * std::f64::consts::E).powf(vf)).ln();
    let dudley_tail = log_sqrt_tail(a, exponent, e0);
    let dudley_integral = dudley_grid + dudley_tail;
    let dudley_finite = envelope_holds && dudley_integral.is_finite();

    let root: Vec<f64> = rows.iter().map(|r| (r.upper as f64).powf(1.0 / opts.p)).collect();
    let lp_grid = trapezoid(&eps, &root);
    let power = exponent / opts.p;
    let lp_tail = (power < 1.0).then(|| (envelope_constant * shape(1.0)).powf(1.0 / opts.p) * e0.powf(1.0 - power) / (1.0 - power));
    let lp_integral = lp_tail.map(|t| t + lp_grid);
    let lp_finite = envelope_holds && lp_integral.is_some_and(f64::is_finite);

    Ok(CoveringReport {
        class: class.label(),
        dim: class.dim,
        level: class.level,
        discretization_radius: class.discretization_radius(),
        rows,
        vc_index: v,
        envelope_exponent: exponent,
        envelope_constant,
        envelope_holds,
        fit_range,
        fitted_exponent,
        dudley_grid,
        dudley_tail,
        dudley_integral,
        dudley_finite,
        p: opts.p,
        lp_grid,
        lp_tail,
        lp_integral,
        lp_finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[&[f64]]) -> Vec<Vec<f64>> {
        v.iter().map(|x| x.to_vec()).collect()
    }

    /// All subsets picked by intervals/quadrants, by brute force over a fine threshold grid.
    fn brute_picks_1d(points: &[f64], boxes: bool) -> usize {
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
        let mut seen = HashSet::new();
        for &lo in &grid {
            for &hi in &grid {
                if lo > hi || (!boxes && lo > 0.0) {
                    continue;
                }
                let m = points
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| lo <= x && x <= hi)
                    .fold(0u64, |m, (i, _)| m | 1 << i);
                seen.insert(m);
            }
        }
        seen.len()
    }

    #[test]
    fn picked_counts() {
        let q1 = SetClass::quadrants(1, 0).unwrap();
        let b1 = SetClass::boxes(1, 0).unwrap();
        let two = pts(&[&[0.3], &[0.7]]);
        assert_eq!(picked_count(&q1, &two).unwrap(), 3);
        assert_eq!(picked_count(&b1, &two).unwrap(), 4);
        assert_eq!(picked_count(&q1, &[]).unwrap(), 1);
        assert_eq!(picked_count(&b1, &[]).unwrap(), 1);
        let dup = pts(&[&[0.3], &[0.3]]);
        assert!(picked_count(&q1, &dup).is_err());
        let three = [0.15, 0.5, 0.85];
        let p3: Vec<Vec<f64>> = three.iter().map(|&x| vec![x]).collect();
        assert_eq!(picked_count(&q1, &p3).unwrap(), brute_picks_1d(&three, false));
        assert_eq!(picked_count(&b1, &p3).unwrap(), brute_picks_1d(&three, true));
        // a point at the origin lies in every quadrant
        assert_eq!(picked_count(&q1, &pts(&[&[0.0]])).unwrap(), 1);
    }

    #[test]
    fn vc_indices_small() {
        let search = VcSearch::default();
        let q1 = vc_index(&SetClass::quadrants(1, 0).unwrap(), search).unwrap();
        assert_eq!((q1.index, q1.exact), (2, true));
        assert_eq!(q1.witness.len(), 1);
        let b1 = vc_index(&SetClass::boxes(1, 0).unwrap(), search).unwrap();
        assert_eq!((b1.index, b1.exact), (3, true));
        let q2 = vc_index(&SetClass::quadrants(2, 0).unwrap(), search).unwrap();
        assert_eq!((q2.index, q2.exact), (3, true));
        assert!(shatters(&SetClass::quadrants(2, 0).unwrap(), &q2.witness).unwrap());
        let empty = SetClass::explicit(1, vec![], true).unwrap();
        let e = vc_index(&empty, search).unwrap();
        assert_eq!((e.index, e.exact), (1, true));
    }

    #[test]
    fn budget_gives_lower_bound() {
        let r = vc_index(&SetClass::quadrants(2, 0).unwrap(), VcSearch { max_n: 8, budget: 3 }).unwrap();
        assert!(!r.exact);
        assert!(r.index <= 3);
    }

    #[test]
    fn rho_examples() {
        let a = Rect::quadrant(vec![0.5, 0.5]).unwrap();
        let b = Rect::quadrant(vec![0.5, 1.0]).unwrap();
        assert_eq!(rho(&a, &a).unwrap(), 0.0);
        assert!((rho(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert!(rho(&a, &Rect::unit(1)).is_err());
    }

    #[test]
    fn covering_basics() {
        let q1 = SetClass::quadrants(1, 7).unwrap();
        assert_eq!(covering_number(&q1, 1.0).unwrap(), 1);
        assert!(covering_number(&q1, 0.01).is_err());
        // [0,s] and [0,t] are within ε iff |t − s| ≤ ε²: the greedy net on a sorted
        // grid takes every ⌊ε² m⌋ + 1-th point
        let eps: f64 = 0.3;
        let m = 128usize;
        let stride = (eps * eps * m as f64 + 1e-9).floor() as usize + 1;
        let oracle = m / stride + 1;
        assert_eq!(covering_number(&q1, eps).unwrap(), oracle);
        assert!(packing_lower_bound(&q1, eps).unwrap() <= oracle);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rect2() -> impl Strategy<Value = Rect> {
            (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, c, d)| {
                Rect::new(vec![a.min(b), c.min(d)], vec![a.max(b), c.max(d)]).unwrap()
            })
        }

        proptest! {
            #[test]
            fn rho_triangle(a in rect2(), b in rect2(), c in rect2()) {
                let ab = rho(&a, &b).unwrap();
                let bc = rho(&b, &c).unwrap();
                let ac = rho(&a, &c).unwrap();
                prop_assert!(ac <= ab + bc + 1e-12);
                prop_assert!((ab - rho(&b, &a).unwrap()).abs() < 1e-15);
            }

            #[test]
            fn picked_bounded(coords in proptest::collection::btree_set((0u8..20, 0u8..20), 0..6)) {
                let points: Vec<Vec<f64>> = coords.iter().map(|&(x, y)| vec![x as f64 / 19.0, y as f64 / 19.0]).collect();
                for class in [SetClass::quadrants(2, 0).unwrap(), SetClass::boxes(2, 0).unwrap()] {
                    let c = picked_count(&class, &points).unwrap();
                    prop_assert!(c >= 1 && c <= 1 << points.len());
                    prop_assert_eq!(c == 1 << points.len(), shatters(&class, &points).unwrap());
                }
            }
        }
    }
}
