//! Orthomartingale-coboundary decomposition
//!
//! `f = m + Σ_{∅≠J⊊⟨d⟩} Π_{s∈J}(I−U_s) m_J + Π_{s=1}^d (I−U_s) g`
//!
//! on the linear chaos. Axes are 1-based; a subset `J` of axes is encoded as the
//! bitmask with bit `s-1` set for every `s ∈ J`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chaos::{ChaosElement, SigmaAlgebraSpec};
use crate::error::{invalid, Error, Result};
use crate::lattice::{check_axis, MultiIndex};

/// Bitmask of a set of 1-based axes.
pub fn subset_mask(axes: &[usize]) -> u32 {
    axes.iter().fold(0, |m, &s| m | (1 << (s - 1)))
}

/// Axes (1-based, increasing) contained in `mask`.
pub fn mask_axes(mask: u32) -> Vec<usize> {
    (1..=32).filter(|s| mask & (1 << (s - 1)) != 0).collect()
}

fn full_mask(dim: usize) -> u32 {
    if dim >= 32 {
        u32::MAX
    } else {
        (1u32 << dim) - 1
    }
}

/// `(M_s, G_s)` with `F = M_s + (I − U_s) G_s`, where
/// `M_s = Σ_{k≥0} (E[U_s^k F | T^{base}M] − E[U_s^k F | T^{base+e_s}M])` and
/// `G_s = Σ_{k≥0} E[U_s^k F | T^{base+e_s}M]`. The sums stop once `U_s^k F`
/// leaves `T^{base}M`, which happens after the support extent along `s`.
pub fn volny_step(f: &ChaosElement, s: usize, base: &MultiIndex) -> Result<(ChaosElement, ChaosElement)> {
    let d = f.dim();
    check_axis(s, d)?;
    let offending = f.non_measurable_indices(base)?;
    if !offending.is_empty() {
        return Err(Error::NotMeasurable {
            base: base.clone(),
            offending,
        });
    }
    let past = SigmaAlgebraSpec::shifted_past(base.clone());
    let mut next = base.clone();
    next.set_coord(s, base.coord(s) + 1);
    let next_past = SigmaAlgebraSpec::shifted_past(next);

    let mut m = ChaosElement::zero(d);
    let mut g = ChaosElement::zero(d);
    let Some(top) = f.max_coord(s) else {
        return Ok((m, g));
    };
    for k in 0..=(top - base.coord(s)) {
        let shifted = f.shift_axis(s, k)?;
        let upper = shifted.project(&past)?;
        let lower = shifted.project(&next_past)?;
        m = m.add(&upper.sub(&lower)?)?;
        g = g.add(&lower)?;
    }
    Ok((m, g))
}

/// Output of [`decompose`]: `m`, the boundary terms `m_J` keyed by bitmask, and the
/// corner term `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    dim: usize,
    pub m: ChaosElement,
    pub boundary_terms: BTreeMap<u32, ChaosElement>,
    pub g: ChaosElement,
}

impl Decomposition {
    /// Builds a decomposition, filling absent boundary terms with zero.
    pub fn new(m: ChaosElement, boundary_terms: BTreeMap<u32, ChaosElement>, g: ChaosElement) -> Result<Self> {
        let dim = m.dim();
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.dim(),
            });
        }
        let full = full_mask(dim);
        let mut terms = BTreeMap::new();
        for mask in 1..full {
            terms.insert(mask, ChaosElement::zero(dim));
        }
        for (mask, t) in boundary_terms {
            if mask == 0 || mask >= full {
                return invalid(format!("boundary key {mask} is not a proper nonempty subset of 1..={dim}"));
            }
            if t.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: t.dim(),
                });
            }
            terms.insert(mask, t);
        }
        Ok(Decomposition {
            dim,
            m,
            boundary_terms: terms,
            g,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(ChaosElement::zero(dim), BTreeMap::new(), ChaosElement::zero(dim)).expect("consistent dimensions")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `m_J` for the axes in `axes`.
    pub fn boundary(&self, axes: &[usize]) -> Option<&ChaosElement> {
        self.boundary_terms.get(&subset_mask(axes))
    }

    /// All terms keyed by bitmask: `0 → m`, proper subsets → `m_J`, full set → `g`.
    pub fn terms(&self) -> BTreeMap<u32, &ChaosElement> {
        let mut out: BTreeMap<u32, &ChaosElement> = self.boundary_terms.iter().map(|(k, v)| (*k, v)).collect();
        out.insert(0, &self.m);
        out.insert(full_mask(self.dim), &self.g);
        out
    }

    fn from_terms(dim: usize, mut terms: BTreeMap<u32, ChaosElement>) -> Self {
        let full = full_mask(dim);
        let m = terms.remove(&0).unwrap_or_else(|| ChaosElement::zero(dim));
        let g = terms.remove(&full).unwrap_or_else(|| ChaosElement::zero(dim));
        Self::new(m, terms, g).expect("terms built with a common dimension")
    }
}

/// Applies `Π_{s∈axes}(I − U_s)` by expanding over subsets with signed shifts.
pub fn difference_operator(t: &ChaosElement, mask: u32) -> Result<ChaosElement> {
    let d = t.dim();
    let axes = mask_axes(mask);
    if let Some(&s) = axes.last() {
        check_axis(s, d)?;
    }
    let mut out = ChaosElement::zero(d);
    // iterate sub-masks of `mask`
    let mut sub = mask;
    loop {
        let shift = MultiIndex::indicator(d, mask_axes(sub));
        let sign = if sub.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        out = ChaosElement::combine(1.0, &out, sign, &t.shift(&shift)?)?;
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    Ok(out)
}

/// `m + Σ_J Π_{s∈J}(I−U_s) m_J + Π_s (I−U_s) g`, evaluated exactly.
pub fn reconstruct(dec: &Decomposition) -> Result<ChaosElement> {
    let mut out = ChaosElement::zero(dec.dim);
    for (mask, t) in dec.terms() {
        out = out.add(&difference_operator(t, mask)?)?;
    }
    Ok(out)
}

fn require_past_measurable(f: &ChaosElement) -> Result<()> {
    let base = MultiIndex::zeros(f.dim());
    let offending = f.non_measurable_indices(&base)?;
    if offending.is_empty() {
        Ok(())
    } else {
        Err(Error::NotMeasurable { base, offending })
    }
}

/// Decomposes an `M`-measurable element. `d = 1` is a single Volný step; `d = 2`
/// and `d = 3` follow the explicit chains; `d ≥ 4` uses [`decompose_generic`].
pub fn decompose(f: &ChaosElement) -> Result<Decomposition> {
    match f.dim() {
        1 => {
            require_past_measurable(f)?;
            let (m, g) = volny_step(f, 1, &MultiIndex::zeros(1))?;
            Decomposition::new(m, BTreeMap::new(), g)
        }
        2 => decompose_d2_chain(f),
        3 => decompose_d3_chain(f),
        _ => decompose_generic(f),
    }
}

/// Generic recursion for any `d`: a Volný step along the last remaining axis,
/// recursion on the martingale part followed by the correction `t ↦ t − Q t`
/// with `Q` the projection onto `{l_s ≥ base_s + 1}`, and recursion on the
/// transfer function with the base raised along that axis.
pub fn decompose_generic(f: &ChaosElement) -> Result<Decomposition> {
    require_past_measurable(f)?;
    let d = f.dim();
    let axes: Vec<usize> = (1..=d).collect();
    let terms = recurse(f, &axes, &MultiIndex::zeros(d))?;
    Ok(Decomposition::from_terms(d, terms))
}

fn recurse(h: &ChaosElement, axes: &[usize], base: &MultiIndex) -> Result<BTreeMap<u32, ChaosElement>> {
    let Some((&s, rest)) = axes.split_last() else {
        return Ok(BTreeMap::from([(0, h.clone())]));
    };
    let (m, g) = volny_step(h, s, base)?;
    let q = SigmaAlgebraSpec::half_space(s, base.coord(s) + 1);
    let mut out = BTreeMap::new();
    for (mask, t) in recurse(&m, rest, base)? {
        let corrected = t.sub(&t.project(&q)?)?;
        out.insert(mask, corrected);
    }
    let mut raised = base.clone();
    raised.set_coord(s, base.coord(s) + 1);
    let bit = 1u32 << (s - 1);
    for (mask, t) in recurse(&g, rest, &raised)? {
        out.insert(mask | bit, t);
    }
    Ok(out)
}

fn past(d: usize, axes: &[usize]) -> SigmaAlgebraSpec {
    SigmaAlgebraSpec::shifted_past(MultiIndex::indicator(d, axes.iter().copied()))
}

/// `h − E[h | T^{e_K}M]`.
fn minus_projection(h: &ChaosElement, axes: &[usize]) -> Result<ChaosElement> {
    h.sub(&h.project(&past(h.dim(), axes))?)
}

/// The two-dimensional chain:
/// `f = m_2 + (I−U_2)g_2`, `m_2 = m_1 + (I−U_1)g_1`, `m = m_1 − E[m_1|T_2M]`,
/// `g_2 = m̄_1 + (I−U_1)ḡ_1`, giving
/// `f = m + (I−U_1)[g_1 − E[g_1|T_2M]] + (I−U_2)m̄_1 + (I−U_1)(I−U_2)ḡ_1`.
pub fn decompose_d2_chain(f: &ChaosElement) -> Result<Decomposition> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: f.dim(),
        });
    }
    require_past_measurable(f)?;
    let zero = MultiIndex::zeros(2);
    let (m_2, g_2) = volny_step(f, 2, &zero)?;
    let (m_1, g_1) = volny_step(&m_2, 1, &zero)?;
    let m = minus_projection(&m_1, &[2])?;
    let term_1 = minus_projection(&g_1, &[2])?;
    let (m1_bar, g1_bar) = volny_step(&g_2, 1, &MultiIndex::unit(2, 2))?;
    Decomposition::new(
        m,
        BTreeMap::from([(subset_mask(&[1]), term_1), (subset_mask(&[2]), m1_bar)]),
        g1_bar,
    )
}

/// The three-dimensional chain, term for term.
pub fn decompose_d3_chain(f: &ChaosElement) -> Result<Decomposition> {
    if f.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: f.dim(),
        });
    }
    require_past_measurable(f)?;
    let zero = MultiIndex::zeros(3);
    let e = |axes: &[usize]| MultiIndex::indicator(3, axes.iter().copied());

    let (m_3, g_3) = volny_step(f, 3, &zero)?;
    let (m_2, g_2) = volny_step(&m_3, 2, &zero)?;
    let (m_1, g_1) = volny_step(&m_2, 1, &zero)?;

    // m = m_1 − E[m_1|T_2M] − E[m_1|T_3M] + E[m_1|T_2T_3M], same correction for g_1
    let inclusion_exclusion = |h: &ChaosElement| -> Result<ChaosElement> {
        let a = h.project(&past(3, &[2]))?;
        let b = h.project(&past(3, &[3]))?;
        let c = h.project(&past(3, &[2, 3]))?;
        h.sub(&a)?.sub(&b)?.add(&c)
    };
    let m = inclusion_exclusion(&m_1)?;
    let term_1 = inclusion_exclusion(&g_1)?;

    // g_2 = m̿_1 + (I−U_1) g̿_1
    let (mbb_1, gbb_1) = volny_step(&g_2, 1, &e(&[2]))?;
    let term_2 = minus_projection(&mbb_1, &[3])?;
    let term_12 = minus_projection(&gbb_1, &[3])?;

    // g_3 = m̄_1 + (I−U_1) ḡ_1, m̄_1 = m̄_2 + (I−U_2) ḡ_2
    let (mb_1, gb_1) = volny_step(&g_3, 1, &e(&[3]))?;
    let (mb_2, gb_2) = volny_step(&mb_1, 2, &e(&[3]))?;
    let term_3 = minus_projection(&mb_2, &[1, 3])?;
    let term_23 = minus_projection(&gb_2, &[1])?;

    // ḡ_1 = m̿_2 + (I−U_2) ḡ̿_2
    let (mbb_2, gbb_2) = volny_step(&gb_1, 2, &e(&[1, 3]))?;

    Decomposition::new(
        m,
        BTreeMap::from([
            (subset_mask(&[1]), term_1),
            (subset_mask(&[2]), term_2),
            (subset_mask(&[3]), term_3),
            (subset_mask(&[1, 2]), term_12),
            (subset_mask(&[1, 3]), mbb_2),
            (subset_mask(&[2, 3]), term_23),
        ]),
        gbb_2,
    )
}

/// Residual `‖E[t | T^{e_s}M]‖` (unit innovation variance) for one term and axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmdResidual {
    /// Bitmask of `J`; `0` refers to `m`.
    pub subset: u32,
    pub axis: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmdReport {
    pub residuals: Vec<OmdResidual>,
    /// Bitmasks of terms with indices outside `M`.
    pub non_measurable: Vec<u32>,
    pub passed: bool,
}

/// Checks `E[m | T^{e_s}M] = 0` for all `s` and `E[m_J | T^{e_s}M] = 0` for `s ∉ J`,
/// together with `M`-measurability of every term. Passing requires exact zeros.
pub fn omd_verify(dec: &Decomposition) -> OmdReport {
    let d = dec.dim;
    let zero = MultiIndex::zeros(d);
    let mut residuals = Vec::new();
    let mut non_measurable = Vec::new();
    for (mask, t) in dec.terms() {
        if !t.is_measurable(&zero).expect("dimension checked at construction") {
            non_measurable.push(mask);
        }
        if mask == full_mask(d) {
            continue;
        }
        for s in (1..=d).filter(|s| mask & (1 << (s - 1)) == 0) {
            let r = t
                .project(&SigmaAlgebraSpec::axis_past(d, s, 1))
                .expect("dimension checked at construction");
            residuals.push(OmdResidual {
                subset: mask,
                axis: s,
                residual: r.sum_of_squares().sqrt(),
            });
        }
    }
    let passed = non_measurable.is_empty() && residuals.iter().all(|r| r.residual == 0.0);
    OmdReport {
        residuals,
        non_measurable,
        passed,
    }
}

/// `Σ_{k=0}^{n-1} U_s^k F` along one axis.
pub fn axis_partial_sum(f: &ChaosElement, s: usize, n: usize) -> Result<ChaosElement> {
    let mut out = ChaosElement::zero(f.dim());
    for k in 0..n as i64 {
        out = out.add(&f.shift_axis(s, k)?)?;
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct DecompositionRepr {
    m: ChaosElement,
    #[serde(rename = "mJ")]
    m_j: BTreeMap<String, ChaosElement>,
    g: ChaosElement,
}

impl Serialize for Decomposition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        // numeric order of keys, not lexicographic string order
        let mut m_j = BTreeMap::new();
        for (mask, t) in &self.boundary_terms {
            m_j.insert(format!("{mask:0width$}", width = digits(full_mask(self.dim))), t.clone());
        }
        DecompositionRepr {
            m: self.m.clone(),
            m_j,
            g: self.g.clone(),
        }
        .serialize(serializer)
    }
}

fn digits(x: u32) -> usize {
    x.to_string().len()
}

impl<'de> Deserialize<'de> for Decomposition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = DecompositionRepr::deserialize(deserializer)?;
        let mut terms = BTreeMap::new();
        for (key, t) in repr.m_j {
            let mask: u32 = key
                .parse()
                .map_err(|_| D::Error::custom(format!("boundary key {key:?} is not a bitmask")))?;
            if terms.insert(mask, t).is_some() {
                return Err(D::Error::custom(format!("duplicate boundary key {mask}")));
            }
        }
        Decomposition::new(repr.m, terms, repr.g).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(c: &[i64]) -> MultiIndex {
        MultiIndex::from_slice(c)
    }

    fn el(dim: usize, entries: &[(&[i64], f64)]) -> ChaosElement {
        ChaosElement::from_entries(dim, entries.iter().map(|(i, c)| (mi(i), *c))).unwrap()
    }

    #[test]
    fn volny_step_column_sums() {
        let f = el(1, &[(&[0], 1.0), (&[1], 2.0), (&[2], 3.0)]);
        let (m, g) = volny_step(&f, 1, &mi(&[0])).unwrap();
        assert_eq!(m, el(1, &[(&[0], 6.0)]));
        assert_eq!(g, el(1, &[(&[1], 5.0), (&[2], 3.0)]));
        let back = m.add(&g).unwrap().sub(&g.shift_axis(1, 1).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn volny_step_trivial_cases() {
        for s in 1..=2 {
            let e0 = ChaosElement::innovation(mi(&[0, 0]));
            let (m, g) = volny_step(&e0, s, &mi(&[0, 0])).unwrap();
            assert_eq!(m, e0);
            assert!(g.is_zero());

            let lag = ChaosElement::innovation(MultiIndex::unit(2, s));
            let cob = difference_operator(&lag, subset_mask(&[s])).unwrap();
            let (m, g) = volny_step(&cob, s, &mi(&[0, 0])).unwrap();
            assert!(m.is_zero());
            assert_eq!(g, lag);
        }
    }

    #[test]
    fn volny_step_rejects_non_measurable() {
        let f = el(2, &[(&[0, 0], 1.0), (&[-1, 2], 1.0)]);
        match volny_step(&f, 1, &mi(&[0, 0])) {
            Err(Error::NotMeasurable { offending, .. }) => assert_eq!(offending, vec![mi(&[-1, 2])]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(volny_step(&f, 3, &mi(&[0, 0])).is_err());
    }

    #[test]
    fn d1_example() {
        let f = el(1, &[(&[0], 1.0), (&[1], 1.0)]);
        let dec = decompose(&f).unwrap();
        assert_eq!(dec.m, el(1, &[(&[0], 2.0)]));
        assert_eq!(dec.g, el(1, &[(&[1], 1.0)]));
        assert!(dec.boundary_terms.is_empty());
        assert_eq!(reconstruct(&dec).unwrap(), f);
    }

    #[test]
    fn d2_iid_is_its_own_decomposition() {
        let f = ChaosElement::innovation(mi(&[0, 0]));
        let dec = decompose(&f).unwrap();
        assert_eq!(dec.m, f);
        assert!(dec.boundary_terms.values().all(|t| t.is_zero()));
        assert!(dec.g.is_zero());
    }

    #[test]
    fn d2_three_term_example() {
        let f = el(2, &[(&[0, 0], 1.0), (&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let dec = decompose(&f).unwrap();
        assert_eq!(dec.m, el(2, &[(&[0, 0], 3.0)]));
        assert_eq!(reconstruct(&dec).unwrap(), f);
        assert!(omd_verify(&dec).passed);
        assert_eq!(decompose_generic(&f).unwrap(), dec);
    }

    #[test]
    fn reconstruct_hand_built() {
        let mut terms = BTreeMap::new();
        terms.insert(subset_mask(&[1]), ChaosElement::innovation(mi(&[1, 0])));
        let dec = Decomposition::new(ChaosElement::zero(2), terms, ChaosElement::zero(2)).unwrap();
        assert_eq!(
            reconstruct(&dec).unwrap(),
            el(2, &[(&[1, 0], 1.0), (&[0, 0], -1.0)])
        );
        let m = el(2, &[(&[0, 0], 1.5)]);
        let dec = Decomposition::new(m.clone(), BTreeMap::new(), ChaosElement::zero(2)).unwrap();
        assert_eq!(reconstruct(&dec).unwrap(), m);
    }

    #[test]
    fn omd_verify_examples() {
        let broken = Decomposition::new(
            ChaosElement::innovation(mi(&[1, 0])),
            BTreeMap::new(),
            ChaosElement::zero(2),
        )
        .unwrap();
        let report = omd_verify(&broken);
        assert!(!report.passed);
        let axis1 = report.residuals.iter().find(|r| r.subset == 0 && r.axis == 1).unwrap();
        assert_eq!(axis1.residual, 1.0);

        let mut terms = BTreeMap::new();
        terms.insert(subset_mask(&[1]), ChaosElement::innovation(mi(&[1, 0])));
        let ok = Decomposition::new(ChaosElement::zero(2), terms, ChaosElement::zero(2)).unwrap();
        let report = omd_verify(&ok);
        assert!(report.passed);
        assert!(report.residuals.iter().all(|r| r.subset != 1 || r.axis == 2));
    }

    #[test]
    fn zero_input() {
        for d in 1..=4 {
            let dec = decompose(&ChaosElement::zero(d)).unwrap();
            assert_eq!(dec, Decomposition::zero(d));
        }
    }

    #[test]
    fn rejects_non_measurable_input() {
        let f = el(2, &[(&[0, -1], 1.0)]);
        assert!(matches!(decompose(&f), Err(Error::NotMeasurable { .. })));
        assert!(matches!(decompose_generic(&f), Err(Error::NotMeasurable { .. })));
    }

    #[test]
    fn json_layout() {
        let f = el(2, &[(&[0, 0], 1.0), (&[1, 1], 2.0)]);
        let dec = decompose(&f).unwrap();
        let value: serde_json::Value = serde_json::to_value(&dec).unwrap();
        let keys: Vec<&String> = value["mJ"].as_object().unwrap().keys().collect();
        assert_eq!(keys, vec!["1", "2"]);
        let back: Decomposition = serde_json::from_value(value).unwrap();
        assert_eq!(back, dec);
        let bad = r#"{"m":{"d":2,"entries":[]},"mJ":{"3":{"d":2,"entries":[]}},"g":{"d":2,"entries":[]}}"#;
        assert!(serde_json::from_str::<Decomposition>(bad).is_err());
    }

    #[test]
    fn difference_operator_expands_products() {
        let t = ChaosElement::innovation(mi(&[1, 1]));
        let out = difference_operator(&t, subset_mask(&[1, 2])).unwrap();
        let expected = el(
            2,
            &[(&[1, 1], 1.0), (&[0, 1], -1.0), (&[1, 0], -1.0), (&[0, 0], 1.0)],
        );
        assert_eq!(out, expected);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn measurable(dim: usize) -> impl Strategy<Value = ChaosElement> {
            proptest::collection::vec((proptest::collection::vec(0i64..5, dim), -1.0f64..1.0), 0..10)
                .prop_map(move |entries| {
                    ChaosElement::from_entries(dim, entries.into_iter().map(|(i, c)| (MultiIndex::new(i), c)))
                        .unwrap()
                })
        }

        proptest! {
            #[test]
            fn reconstruction_and_omd(f in (1usize..5).prop_flat_map(measurable)) {
                for dec in [decompose(&f).unwrap(), decompose_generic(&f).unwrap()] {
                    let back = reconstruct(&dec).unwrap();
                    prop_assert!(back.max_abs_diff(&f) < 1e-10);
                    let report = omd_verify(&dec);
                    prop_assert!(report.passed, "{:?}", report);
                }
            }

            #[test]
            fn m_collapses_to_coefficient_sum(f in (1usize..4).prop_flat_map(measurable)) {
                let dec = decompose(&f).unwrap();
                let origin = MultiIndex::zeros(f.dim());
                prop_assert!((dec.m.coeff(&origin) - f.coefficient_sum()).abs() < 1e-12);
                prop_assert!(dec.m.indices().all(|i| *i == origin));
            }

            #[test]
            fn volny_step_contract(f in (1usize..4).prop_flat_map(measurable), s_raw in 1usize..4) {
                let d = f.dim();
                let s = 1 + (s_raw - 1) % d;
                let base = MultiIndex::zeros(d);
                let (m, g) = volny_step(&f, s, &base).unwrap();
                let back = m.add(&g).unwrap().sub(&g.shift_axis(s, 1).unwrap()).unwrap();
                prop_assert!(back.max_abs_diff(&f) < 1e-12);
                prop_assert!(m.project(&SigmaAlgebraSpec::axis_past(d, s, 1)).unwrap().is_zero());
                prop_assert!(g.is_measurable(&MultiIndex::unit(d, s)).unwrap());
            }
        }
    }
}
