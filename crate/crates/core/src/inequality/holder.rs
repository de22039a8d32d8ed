//! Hölder-space diagnostics: the moment threshold `4 / log₂(4d/(4d−3))`, the
//! admissible range `γ < 1/2 − d/p`, and the tightness table
//! `P(|Y(t) − Y(s)| ≥ ε) ≤ K ε^{−p} ‖t − s‖^{p/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::simulation::{euclid, holder_modulus};

/// `4 / log₂(4d / (4d − 3))`.
pub fn holder_threshold(d: usize) -> Result<f64> {
    if d == 0 {
        return invalid("d must be at least 1");
    }
    let d = d as f64;
    Ok(4.0 / (4.0 * d / (4.0 * d - 3.0)).log2())
}

/// `1/2 − d/p`.
pub fn holder_gamma_bound(d: usize, p: f64) -> f64 {
    0.5 - d as f64 / p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub s: usize,
    pub t: usize,
    pub distance: f64,
    pub epsilon: f64,
    pub frequency: f64,
    /// `frequency · ε^p / ‖t − s‖^{p/2}`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusSummary {
    pub mean: f64,
    pub median: f64,
    pub q95: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub d: usize,
    pub p: f64,
    pub threshold: f64,
    /// `p` above the threshold.
    pub moment_condition: bool,
    pub gamma: f64,
    pub gamma_bound: f64,
    pub admissible: bool,
    pub replicas: usize,
    pub table: Vec<TightnessRow>,
    /// `max ratio` over the table: the smallest `K` valid for every triple.
    pub fitted_k: f64,
    /// `max_{s≠t} mean|Y(t) − Y(s)|^p / ‖t − s‖^{p/2}`.
    pub moment_k: f64,
    /// `fitted_k` finite and bounded by `moment_k`.
    pub k_valid: bool,
    pub modulus: ModulusSummary,
}

/// Builds the tightness table from paths sampled at `points`; `paths[r][i]` is the
/// value of replica `r` at `points[i]`.
pub fn holder_check(
    points: &[Vec<f64>],
    paths: &[Vec<f64>],
    d: usize,
    p: f64,
    gamma: f64,
    epsilons: &[f64],
) -> Result<HolderReport> {
    if !(p.is_finite() && p > 0.0) {
        return invalid("p must be positive");
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return invalid("gamma must be positive");
    }
    if points.len() < 2 || points.iter().any(|t| t.len() != d) {
        return invalid("need at least two evaluation points of dimension d");
    }
    if paths.is_empty() || paths.iter().any(|r| r.len() != points.len()) {
        return invalid("every path must have one value per point");
    }
    if epsilons.is_empty() || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return invalid("epsilons must be positive");
    }
    let threshold = holder_threshold(d)?;
    let gamma_bound = holder_gamma_bound(d, p);
    let reps = paths.len() as f64;
    let mut table = Vec::new();
    let mut moment_k: f64 = 0.0;
    let mut diffs = vec![0.0; paths.len()];
    for s in 0..points.len() {
        for t in (s + 1)..points.len() {
            let distance = euclid(&points[s], &points[t]);
            if distance == 0.0 {
                continue;
            }
            let scale = distance.powf(p / 2.0);
            for (r, path) in paths.iter().enumerate() {
                diffs[r] = (path[t] - path[s]).abs();
            }
            let moment = diffs.iter().map(|x| x.powf(p)).sum::<f64>() / reps;
            moment_k = moment_k.max(moment / scale);
            for &epsilon in epsilons {
                let frequency = diffs.iter().filter(|&&x| x >= epsilon).count() as f64 / reps;
                table.push(TightnessRow {
                    s,
                    t,
                    distance,
                    epsilon,
                    frequency,
                    ratio: frequency * epsilon.powf(p) / scale,
                });
            }
        }
    }
    let fitted_k = table.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let mut moduli: Vec<f64> = paths.iter().map(|path| holder_modulus(points, path, gamma)).collect();
    moduli.sort_by(f64::total_cmp);
    let quantile = |q: f64| moduli[((moduli.len() - 1) as f64 * q).round() as usize];
    let modulus = ModulusSummary {
        mean: moduli.iter().sum::<f64>() / reps,
        median: quantile(0.5),
        q95: quantile(0.95),
        max: *moduli.last().expect("nonempty"),
    };
    Ok(HolderReport {
        d,
        p,
        threshold,
        moment_condition: p > threshold,
        gamma,
        gamma_bound,
        admissible: gamma < gamma_bound,
        replicas: paths.len(),
        table,
        fitted_k,
        moment_k,
        k_valid: fitted_k.is_finite() && fitted_k <= moment_k * (1.0 + 1e-12),
        modulus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert!((holder_threshold(1).unwrap() - 2.0).abs() < 1e-15);
        let oracle = 4.0 / (8.0f64 / 5.0).log2();
        assert!((holder_threshold(2).unwrap() - oracle).abs() < 1e-12);
        assert!((holder_threshold(2).unwrap() - 5.8995).abs() < 1e-3);
        let values: Vec<f64> = (1..=6).map(|d| holder_threshold(d).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]) || values.windows(2).all(|w| w[1] < w[0]));
        assert!(holder_threshold(0).is_err());
    }

    #[test]
    fn admissibility() {
        assert!((holder_gamma_bound(2, 8.0) - 0.25).abs() < 1e-15);
        let points = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let paths = vec![vec![0.0, 1.0]; 3];
        let ok = holder_check(&points, &paths, 2, 8.0, 0.2, &[0.5]).unwrap();
        assert!(ok.admissible && ok.moment_condition);
        let bad = holder_check(&points, &paths, 2, 8.0, 0.25, &[0.5]).unwrap();
        assert!(!bad.admissible);
    }

    #[test]
    fn table_entries() {
        let points = vec![vec![0.0], vec![0.25]];
        let paths = vec![vec![0.0, 1.0], vec![0.0, 0.1]];
        let rep = holder_check(&points, &paths, 1, 4.0, 0.1, &[0.5]).unwrap();
        assert_eq!(rep.table.len(), 1);
        let row = rep.table[0];
        assert_eq!(row.frequency, 0.5);
        // 0.5 · 0.5^4 / 0.25^2
        assert!((row.ratio - 0.5).abs() < 1e-12);
        assert!((rep.moment_k - (1.0 + 1e-4) / 2.0 / 0.0625).abs() < 1e-12);
        assert!(rep.k_valid);
    }
}
