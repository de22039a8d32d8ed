//! Seeded stationary fields on finite boxes and set-indexed partial sums.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chaos::ChaosElement;
use crate::error::{invalid, Error, Result};
use crate::law::InnovationLaw;
use crate::lattice::{axis_weight_table, MultiIndex, Rect};
use crate::rng::{substream, InnovationStream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler_id: String,
    pub seed: u64,
    pub stream: u64,
}

/// Dense row-major (last axis fastest) values on the box `origin + [0, extents)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSample {
    origin: Vec<i64>,
    extents: Vec<usize>,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl GridSample {
    pub fn new(origin: Vec<i64>, extents: Vec<usize>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if origin.is_empty() || origin.len() != extents.len() {
            return invalid("grid origin and extents must have the same positive length");
        }
        if extents.contains(&0) {
            return invalid("grid extents must be positive");
        }
        let total: usize = extents.iter().product();
        if values.len() != total {
            return invalid(format!("grid holds {} values, box needs {total}", values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("grid values must be finite");
        }
        Ok(GridSample {
            origin,
            extents,
            values,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn offset(&self, coords: &[i64]) -> Option<usize> {
        let mut off = 0usize;
        for ((&c, &o), &e) in coords.iter().zip(&self.origin).zip(&self.extents) {
            let r = c - o;
            if r < 0 || r >= e as i64 {
                return None;
            }
            off = off * e + r as usize;
        }
        Some(off)
    }

    /// Value at an absolute lattice index, if inside the box.
    pub fn get(&self, index: &MultiIndex) -> Option<f64> {
        if index.dim() != self.dim() {
            return None;
        }
        self.offset(index.coords()).map(|o| self.values[o])
    }

    /// `true` when the box contains `<n>^d = {1..n}^d`.
    pub fn covers_cube(&self, n: usize) -> bool {
        self.origin
            .iter()
            .zip(&self.extents)
            .all(|(&o, &e)| o <= 1 && o + e as i64 - 1 >= n as i64)
    }
}

/// iid innovations on `lower + [0, extents)`, a pure function of `(seed, stream, index)`.
pub fn sample_innovations(
    law: &InnovationLaw,
    lower: &[i64],
    extents: &[usize],
    seed: u64,
    stream: u64,
) -> Result<GridSample> {
    let source = InnovationStream::new(law.clone(), seed, stream);
    let values = source.fill(lower, extents);
    GridSample::new(
        lower.to_vec(),
        extents.to_vec(),
        values,
        Provenance {
            sampler_id: law.sampler_id(),
            seed,
            stream,
        },
    )
}

/// Innovation box `[1 − max_j, n]` per axis needed to evaluate a linear field with
/// coefficients on `support` over `<n>^d`.
pub fn innovation_box(a: &ChaosElement, n: usize) -> Result<(Vec<i64>, Vec<usize>)> {
    let d = a.dim();
    let mut lower = Vec::with_capacity(d);
    let mut extents = Vec::with_capacity(d);
    for s in 1..=d {
        let hi = a.max_coord(s).unwrap_or(0).max(0);
        let lo = a.indices().map(|j| j.coord(s)).min().unwrap_or(0).min(0);
        lower.push(1 - hi);
        extents.push((n as i64 + hi - lo) as usize);
    }
    Ok((lower, extents))
}

/// `X_k = Σ_j a_j ε_{k−j}` for every `k ∈ <n>^d`, by direct convolution.
pub fn sample_linear_field(a: &ChaosElement, innovations: &GridSample, n: usize) -> Result<GridSample> {
    let d = a.dim();
    if innovations.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: innovations.dim(),
        });
    }
    if n == 0 {
        return invalid("box size n must be positive");
    }
    let (need_lower, need_extents) = innovation_box(a, n)?;
    let covered = (0..d).all(|s| {
        let have_lo = innovations.origin[s];
        let have_hi = have_lo + innovations.extents[s] as i64 - 1;
        let need_hi = need_lower[s] + need_extents[s] as i64 - 1;
        have_lo <= need_lower[s] && have_hi >= need_hi
    });
    if !covered {
        let required = (1..=d)
            .map(|s| a.max_coord(s).unwrap_or(0).max(0))
            .collect();
        return Err(Error::InsufficientMargin { required });
    }
    let taps: Vec<(Vec<i64>, f64)> = a.iter().map(|(j, c)| (j.coords().to_vec(), c)).collect();
    let extents = vec![n; d];
    let total = n.pow(d as u32);
    let mut values = Vec::with_capacity(total);
    let mut k = vec![1i64; d];
    let mut idx = vec![0i64; d];
    for _ in 0..total {
        let mut x = 0.0;
        for (j, c) in &taps {
            for s in 0..d {
                idx[s] = k[s] - j[s];
            }
            x += c * innovations.values[innovations.offset(&idx).expect("margin checked")];
        }
        values.push(x);
        for s in (0..d).rev() {
            k[s] += 1;
            if k[s] <= n as i64 {
                break;
            }
            k[s] = 1;
        }
    }
    GridSample::new(vec![1; d], extents, values, innovations.provenance.clone())
}

/// `Z_i = Π_s η^{(s)}_{i_s}` on `<n_1> × ... × <n_d>`, the factors being independent
/// Rademacher sequences on the substreams `(replica, s)`.
pub fn sample_product_omd(seed: u64, replica: u64, extents: &[usize]) -> Result<GridSample> {
    let d = extents.len();
    if d == 0 || d > 255 || extents.contains(&0) {
        return invalid("product field needs 1 <= d <= 255 positive extents");
    }
    let law = InnovationLaw::rademacher();
    let factors: Vec<Vec<f64>> = (0..d)
        .map(|s| InnovationStream::new(law.clone(), seed, substream(replica, s as u8 + 1)).fill(&[1], &[extents[s]]))
        .collect();
    let total: usize = extents.iter().product();
    let mut values = Vec::with_capacity(total);
    let mut k = vec![0usize; d];
    for _ in 0..total {
        values.push((0..d).map(|s| factors[s][k[s]]).product());
        for s in (0..d).rev() {
            k[s] += 1;
            if k[s] < extents[s] {
                break;
            }
            k[s] = 0;
        }
    }
    GridSample::new(
        vec![1; d],
        extents.to_vec(),
        values,
        Provenance {
            sampler_id: "product-rademacher/chacha8-v1".into(),
            seed,
            stream: substream(replica, 0),
        },
    )
}

/// `S_n(A) = Σ_{i∈<n>^d} λ(nA ∩ R_i) X_i`.
pub fn partial_sum(x: &GridSample, a: &Rect, n: usize) -> Result<f64> {
    let d = x.dim();
    if a.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: a.dim(),
        });
    }
    if n == 0 || !x.covers_cube(n) {
        return invalid(format!("grid does not cover <{n}>^{d}"));
    }
    let weights = axis_weight_table(n, a);
    // per-axis index ranges with nonzero weight
    let ranges: Vec<(usize, usize)> = weights
        .iter()
        .map(|w| {
            let first = w.iter().position(|&v| v != 0.0);
            let last = w.iter().rposition(|&v| v != 0.0);
            match (first, last) {
                (Some(f), Some(l)) => (f, l + 1),
                _ => (0, 0),
            }
        })
        .collect();
    if ranges.iter().any(|(f, l)| f == l) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut i: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let mut coords = vec![0i64; d];
    loop {
        let w: f64 = (0..d).map(|s| weights[s][i[s]]).product();
        for s in 0..d {
            coords[s] = i[s] as i64 + 1;
        }
        total += w * x.values[x.offset(&coords).expect("cube covered")];
        let mut s = d;
        loop {
            if s == 0 {
                return Ok(total);
            }
            s -= 1;
            i[s] += 1;
            if i[s] < ranges[s].1 {
                break;
            }
            i[s] = ranges[s].0;
        }
    }
}

/// `n^{−d/2} S_n(A)`.
pub fn normalized_partial_sum(x: &GridSample, a: &Rect, n: usize) -> Result<f64> {
    Ok(partial_sum(x, a, n)? / (n as f64).powf(x.dim() as f64 / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Iid { law: InnovationLaw },
    Linear { coefficients: ChaosElement, law: InnovationLaw },
    ProductOmd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statistic {
    /// `n^{−d/2} S_n([0,1]^d)`.
    Endpoint,
    /// `n^{−d/2} S_n([0,t])` at each point.
    PointValues { points: Vec<Vec<f64>> },
    /// `n^{−d/2} S_n(A)` for each rectangle.
    RectangleSums { rects: Vec<Rect> },
    /// `max |Y(t) − Y(s)| / ‖t − s‖^γ` over the dyadic grid `2^{-level} Z^d ∩ [0,1]^d`.
    SupModulus { level: u32, gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dim: usize,
    pub field: FieldSpec,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub statistic: Statistic,
}

impl ExperimentSpec {
    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex_digest(&bytes)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return invalid("d must be at least 1");
        }
        if self.n == 0 {
            return invalid("n must be positive");
        }
        if self.replicas == 0 {
            return invalid("replicas must be at least 1");
        }
        if let FieldSpec::Linear { coefficients, .. } = &self.field {
            if coefficients.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: coefficients.dim(),
                });
            }
            if coefficients.is_zero() {
                return invalid("linear field needs at least one coefficient");
            }
        }
        match &self.statistic {
            Statistic::Endpoint => {}
            Statistic::PointValues { points } => {
                if points.is_empty() {
                    return invalid("point statistic needs at least one point");
                }
                for t in points {
                    if t.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: t.len(),
                        });
                    }
                    Rect::quadrant(t.clone())?;
                }
            }
            Statistic::RectangleSums { rects } => {
                if rects.is_empty() {
                    return invalid("rectangle statistic needs at least one rectangle");
                }
                if let Some(r) = rects.iter().find(|r| r.dim() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: r.dim(),
                    });
                }
            }
            Statistic::SupModulus { level, gamma } => {
                if *level == 0 || *level > 10 {
                    return invalid("sup-modulus level must be in 1..=10");
                }
                if !(gamma.is_finite() && *gamma > 0.0 && *gamma < 1.0) {
                    return invalid("sup-modulus gamma must lie in (0, 1)");
                }
            }
        }
        Ok(())
    }

    /// Realized field on `<n>^d` for one replica.
    pub fn realize(&self, replica: u64) -> Result<GridSample> {
        let d = self.dim;
        match &self.field {
            FieldSpec::Iid { law } => sample_innovations(law, &vec![1; d], &vec![self.n; d], self.seed, substream(replica, 0)),
            FieldSpec::Linear { coefficients, law } => {
                let (lower, extents) = innovation_box(coefficients, self.n)?;
                let eps = sample_innovations(law, &lower, &extents, self.seed, substream(replica, 0))?;
                sample_linear_field(coefficients, &eps, self.n)
            }
            FieldSpec::ProductOmd => sample_product_omd(self.seed, replica, &vec![self.n; d]),
        }
    }

    /// Column labels of the recorded statistic.
    pub fn labels(&self) -> Vec<String> {
        match &self.statistic {
            Statistic::Endpoint => vec!["endpoint".into()],
            Statistic::PointValues { points } => points.iter().map(|t| format_point(t)).collect(),
            Statistic::RectangleSums { rects } => (0..rects.len()).map(|i| format!("rect{i}")).collect(),
            Statistic::SupModulus { .. } => vec!["sup_modulus".into()],
        }
    }

    fn record(&self, x: &GridSample) -> Result<Vec<f64>> {
        let d = self.dim;
        let n = self.n;
        match &self.statistic {
            Statistic::Endpoint => Ok(vec![normalized_partial_sum(x, &Rect::unit(d), n)?]),
            Statistic::PointValues { points } => points
                .iter()
                .map(|t| normalized_partial_sum(x, &Rect::quadrant(t.clone())?, n))
                .collect(),
            Statistic::RectangleSums { rects } => rects.iter().map(|r| normalized_partial_sum(x, r, n)).collect(),
            Statistic::SupModulus { level, gamma } => {
                let points = dyadic_grid(d, *level);
                let values = points
                    .iter()
                    .map(|t| normalized_partial_sum(x, &Rect::quadrant(t.clone())?, n))
                    .collect::<Result<Vec<_>>>()?;
                Ok(vec![holder_modulus(&points, &values, *gamma)])
            }
        }
    }
}

fn format_point(t: &[f64]) -> String {
    let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
    format!("t=({})", parts.join(","))
}

/// `{0, 2^{-level}, ..., 1}^d`, last axis fastest.
pub fn dyadic_grid(d: usize, level: u32) -> Vec<Vec<f64>> {
    let m = 1usize << level;
    let per_axis = m + 1;
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut code| {
            let mut t = vec![0.0; d];
            for s in (0..d).rev() {
                t[s] = (code % per_axis) as f64 / m as f64;
                code /= per_axis;
            }
            t
        })
        .collect()
}

/// `max_{s≠t} |Y(t) − Y(s)| / ‖t − s‖^γ` with the Euclidean norm.
pub fn holder_modulus(points: &[Vec<f64>], values: &[f64], gamma: f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dist = euclid(&points[i], &points[j]);
            if dist > 0.0 {
                best = best.max((values[i] - values[j]).abs() / dist.powf(gamma));
            }
        }
    }
    best
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Recorded statistics, one row per replica in replica order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    pub spec_hash: String,
    pub seed: u64,
    pub replicas: usize,
    pub n: usize,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl EmpiricalSample {
    /// Values of column `j` across replicas.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Long-format CSV: `replica,label,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv output failed: {e}"));
        w.write_record(["replica", "label", "value"]).map_err(io)?;
        for (r, row) in self.rows.iter().enumerate() {
            for (label, v) in self.labels.iter().zip(row) {
                w.write_record([r.to_string(), label.clone(), format!("{v:e}")]).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// Runs every replica on its own substream. The output is ordered by replica and
/// does not depend on `workers`.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<EmpiricalSample> {
    spec.validate()?;
    if workers == 0 {
        return invalid("workers must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        (0..spec.replicas as u64)
            .into_par_iter()
            .map(|r| spec.record(&spec.realize(r)?))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(EmpiricalSample {
        spec_hash: spec.hash(),
        seed: spec.seed,
        replicas: spec.replicas,
        n: spec.n,
        labels: spec.labels(),
        rows,
    })
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(c: &[i64]) -> MultiIndex {
        MultiIndex::from_slice(c)
    }

    fn grid_1d(values: &[f64]) -> GridSample {
        GridSample::new(
            vec![1],
            vec![values.len()],
            values.to_vec(),
            Provenance {
                sampler_id: "test".into(),
                seed: 0,
                stream: 0,
            },
        )
        .unwrap()
    }

    #[test]
    fn innovations_are_box_independent() {
        let law = InnovationLaw::rademacher();
        let a = sample_innovations(&law, &[0, 0], &[4, 4], 9, 0).unwrap();
        let b = sample_innovations(&law, &[2, -3], &[5, 7], 9, 0).unwrap();
        assert_eq!(a.get(&mi(&[3, 1])), b.get(&mi(&[3, 1])));
        assert!(a.values().iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn innovation_mean_is_small() {
        let law = InnovationLaw::standard_gaussian();
        let g = sample_innovations(&law, &[0], &[1_000_000], 1, 0).unwrap();
        let mean = g.values().iter().sum::<f64>() / 1e6;
        assert!(mean.abs() < 5.0 / 1e3, "{mean}");
    }

    #[test]
    fn identity_kernel() {
        let law = InnovationLaw::standard_gaussian();
        let a = ChaosElement::innovation(mi(&[0, 0]));
        let eps = sample_innovations(&law, &[1, 1], &[6, 6], 3, 0).unwrap();
        let x = sample_linear_field(&a, &eps, 6).unwrap();
        assert_eq!(x.values(), eps.values());
    }

    #[test]
    fn telescoping_kernel_on_alternating_input() {
        let a = ChaosElement::from_entries(1, [(mi(&[0]), 1.0), (mi(&[1]), 1.0)]).unwrap();
        let alt: Vec<f64> = (0..9).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let eps = GridSample::new(
            vec![0],
            vec![9],
            alt,
            Provenance {
                sampler_id: "alt".into(),
                seed: 0,
                stream: 0,
            },
        )
        .unwrap();
        let x = sample_linear_field(&a, &eps, 8).unwrap();
        assert!(x.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn convolution_matches_direct_summation() {
        let law = InnovationLaw::standard_gaussian();
        let a = ChaosElement::from_entries(
            2,
            [(mi(&[0, 0]), 1.0), (mi(&[2, 1]), -0.5), (mi(&[0, 3]), 0.25)],
        )
        .unwrap();
        let n = 12;
        let (lower, extents) = innovation_box(&a, n).unwrap();
        let eps = sample_innovations(&law, &lower, &extents, 17, 4).unwrap();
        let x = sample_linear_field(&a, &eps, n).unwrap();
        let stream = InnovationStream::new(law, 17, 4);
        for k in crate::lattice::box_indices(&[1, 1], &[n as i64, n as i64]) {
            let direct: f64 = a.iter().map(|(j, c)| c * stream.value_at(&(&k - j))).sum();
            assert!((x.get(&k).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn insufficient_margin() {
        let law = InnovationLaw::rademacher();
        let a = ChaosElement::from_entries(2, [(mi(&[0, 0]), 1.0), (mi(&[1, 2]), 1.0)]).unwrap();
        let eps = sample_innovations(&law, &[1, 1], &[4, 4], 0, 0).unwrap();
        assert_eq!(
            sample_linear_field(&a, &eps, 4),
            Err(Error::InsufficientMargin { required: vec![1, 2] })
        );
    }

    #[test]
    fn product_field_structure() {
        let z = sample_product_omd(5, 0, &[6, 7]).unwrap();
        assert!(z.values().iter().all(|v| v.abs() == 1.0));
        // row i is ±(row 1)
        let row = |i: i64| -> Vec<f64> { (1..=7).map(|j| z.get(&mi(&[i, j])).unwrap()).collect() };
        let first = row(1);
        for i in 2..=6 {
            let r = row(i);
            let sign = r[0] * first[0];
            assert!(r.iter().zip(&first).all(|(a, b)| *a == sign * b));
        }
    }

    #[test]
    fn partial_sum_examples() {
        let x = grid_1d(&[2.0, 10.0]);
        let t = Rect::quadrant(vec![0.75]).unwrap();
        assert_eq!(partial_sum(&x, &t, 2).unwrap(), 2.0 + 0.5 * 10.0);
        assert_eq!(partial_sum(&x, &Rect::unit(1), 2).unwrap(), 12.0);
        let empty = Rect::new(vec![0.3], vec![0.3]).unwrap();
        assert_eq!(partial_sum(&x, &empty, 2).unwrap(), 0.0);
        assert!(partial_sum(&x, &Rect::unit(2), 2).is_err());
        assert!(partial_sum(&x, &Rect::unit(1), 3).is_err());
    }

    #[test]
    fn partial_sum_matches_weight_oracle() {
        let law = InnovationLaw::standard_gaussian();
        let n = 7;
        let x = sample_innovations(&law, &[1, 1], &[n, n], 2, 0).unwrap();
        let a = Rect::new(vec![0.1, 0.35], vec![0.8, 0.9]).unwrap();
        let oracle: f64 = crate::lattice::box_indices(&[1, 1], &[n as i64, n as i64])
            .map(|i| crate::lattice::cube_overlap_weight(n, &a, &i).unwrap() * x.get(&i).unwrap())
            .sum();
        assert!((partial_sum(&x, &a, n).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn dyadic_grid_shape() {
        let g = dyadic_grid(2, 1);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![0.0, 0.0]);
        assert_eq!(g[1], vec![0.0, 0.5]);
        assert_eq!(g[8], vec![1.0, 1.0]);
    }

    #[test]
    fn holder_modulus_of_linear_path() {
        let points: Vec<Vec<f64>> = (0..=4).map(|k| vec![k as f64 / 4.0]).collect();
        let values: Vec<f64> = points.iter().map(|t| 3.0 * t[0]).collect();
        // sup 3|t−s|^{1−γ} attained at |t−s| = 1
        assert!((holder_modulus(&points, &values, 0.5) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn experiment_single_replica_matches_direct_run() {
        let spec = ExperimentSpec {
            dim: 2,
            field: FieldSpec::Iid {
                law: InnovationLaw::standard_gaussian(),
            },
            n: 8,
            replicas: 1,
            seed: 4,
            statistic: Statistic::Endpoint,
        };
        let out = run_experiment(&spec, 1).unwrap();
        let x = sample_innovations(&InnovationLaw::standard_gaussian(), &[1, 1], &[8, 8], 4, substream(0, 0)).unwrap();
        let direct = x.values().iter().sum::<f64>() / 8.0;
        assert!((out.rows[0][0] - direct).abs() < 1e-12);
    }

    #[test]
    fn experiment_rejects_mismatched_statistic() {
        let spec = ExperimentSpec {
            dim: 2,
            field: FieldSpec::ProductOmd,
            n: 8,
            replicas: 3,
            seed: 4,
            statistic: Statistic::PointValues {
                points: vec![vec![0.5]],
            },
        };
        assert!(run_experiment(&spec, 2).is_err());
    }

    #[test]
    fn csv_output() {
        let sample = EmpiricalSample {
            spec_hash: "h".into(),
            seed: 1,
            replicas: 2,
            n: 4,
            labels: vec!["a".into(), "b".into()],
            rows: vec![vec![1.0, 2.0], vec![3.0, 4.5]],
        };
        let mut buf = Vec::new();
        sample.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "replica,label,value\n0,a,1e0\n0,b,2e0\n1,a,3e0\n1,b,4.5e0\n"
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn partial_sum_additive(n in 1usize..10, cut in 0.0f64..=1.0, lo in 0.0f64..0.5, hi in 0.5f64..=1.0, seed in 0u64..50) {
                let law = InnovationLaw::standard_gaussian();
                let x = sample_innovations(&law, &[1, 1], &[n, n], seed, 0).unwrap();
                let whole = Rect::new(vec![0.0, lo], vec![1.0, hi]).unwrap();
                let left = Rect::new(vec![0.0, lo], vec![cut, hi]).unwrap();
                let right = Rect::new(vec![cut, lo], vec![1.0, hi]).unwrap();
                let sum = partial_sum(&x, &left, n).unwrap() + partial_sum(&x, &right, n).unwrap();
                prop_assert!((sum - partial_sum(&x, &whole, n).unwrap()).abs() < 1e-9);
            }
        }
    }
}
