//! Kernel estimation of the conditional variance of the pseudo-outcome,
//! sigma^2_s(x) = Var(D | X = x, S = s), used as inverse weights in the
//! penalized solve.
//!
//! The estimator is Nadaraya–Watson with a Gaussian product kernel over the
//! continuous covariate dimensions; binary dimensions are matched exactly.
//! The kernel mean is fit first, then the squared residuals about it are
//! kernel-smoothed. The bandwidth is a common multiplier of the per-dim
//! sample standard deviations, chosen by GCV on the mean fit and then
//! doubled.

use crate::exec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("need at least {needed} pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },
}

pub const MIN_PAIRS: usize = 20;

/// Relative variance floor: sigma^2 is bounded below by this fraction of the
/// sample variance of d (or by an absolute epsilon when d is constant).
pub const FLOOR_FRACTION: f64 = 1e-4;
const ABSOLUTE_FLOOR: f64 = 1e-12;

/// Marks which covariate dimensions take only the values 0/1 and are handled
/// by exact matching rather than kernel smoothing.
pub fn detect_binary_dims(points: &[Vec<f64>]) -> Vec<bool> {
    if points.is_empty() {
        return Vec::new();
    }
    let p = points[0].len();
    (0..p)
        .map(|d| points.iter().all(|x| x[d] == 0.0 || x[d] == 1.0))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    /// Queries where the kernel mass underflowed and the source-wide sample
    /// variance was used instead.
    pub mass_fallbacks: u64,
    /// The GCV bandwidth search ended on a grid edge.
    pub bandwidth_on_grid_edge: bool,
}

/// A fitted per-source conditional-variance field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sigma2Estimator {
    points: Vec<Vec<f64>>,
    /// Squared residuals about the kernel mean at the sample points.
    sq_residuals: Vec<f64>,
    binary: Vec<bool>,
    /// Per-dimension bandwidths (unused entries on binary dims).
    pub bandwidths: Vec<f64>,
    pub floor: f64,
    fallback_variance: f64,
    #[serde(skip, default)]
    pub diagnostics: WeightDiagnostics,
}

fn kernel(x: &[f64], xi: &[f64], bw: &[f64], binary: &[bool]) -> f64 {
    let mut k = 1.0;
    for d in 0..x.len() {
        if binary[d] {
            if x[d] != xi[d] {
                return 0.0;
            }
        } else {
            let z = (x[d] - xi[d]) / bw[d];
            k *= (-0.5 * z * z).exp();
        }
    }
    k
}

/// Nadaraya–Watson mean of `values` at `x`; `None` when the kernel mass
/// underflows to zero.
fn nw_mean(
    x: &[f64],
    points: &[Vec<f64>],
    values: &[f64],
    bw: &[f64],
    binary: &[bool],
) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, &vi) in points.iter().zip(values) {
        let k = kernel(x, xi, bw, binary);
        num += k * vi;
        den += k;
    }
    (den > 0.0).then(|| num / den)
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

fn per_dim_sd(points: &[Vec<f64>], binary: &[bool]) -> Vec<f64> {
    let p = binary.len();
    let n = points.len() as f64;
    (0..p)
        .map(|d| {
            if binary[d] {
                return 1.0;
            }
            let mean = points.iter().map(|x| x[d]).sum::<f64>() / n;
            let var = points.iter().map(|x| (x[d] - mean).powi(2)).sum::<f64>() / n;
            var.sqrt().max(1e-12)
        })
        .collect()
}

/// Selected bandwidth plus whether the search stopped on a grid edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub bandwidths: Vec<f64>,
    pub on_grid_edge: bool,
    pub multiplier: f64,
}

/// Selects per-dimension bandwidths as `2 c* sd_d`, where the common
/// multiplier `c*` minimizes GCV(h) = n RSS / (n - tr S)^2 of the
/// Nadaraya–Watson mean fit over a 20-point log grid on [0.05, 5].
pub fn select_bandwidth(
    points: &[Vec<f64>],
    values: &[f64],
    binary: &[bool],
) -> Result<BandwidthSelection, WeightsError> {
    if points.len() != values.len() || points.is_empty() {
        return Err(WeightsError::InvalidInput("length mismatch".into()));
    }
    if points.len() < MIN_PAIRS {
        return Err(WeightsError::TooFewPairs {
            needed: MIN_PAIRS,
            got: points.len(),
        });
    }
    let n = points.len();
    let sd = per_dim_sd(points, binary);
    let grid_len = 20;
    let (lo, hi) = (0.05f64, 5.0f64);
    let mut best: Option<(f64, usize)> = None;
    let scores = exec::map_indexed(grid_len, |k| {
        let c = lo * (hi / lo).powf(k as f64 / (grid_len - 1) as f64);
        let bw: Vec<f64> = sd.iter().map(|s| c * s).collect();
        // Leave-all-in smoother: RSS and the exact trace of S_h.
        let mut rss = 0.0;
        let mut trace = 0.0;
        for i in 0..n {
            let mut num = 0.0;
            let mut den = 0.0;
            let mut self_k = 0.0;
            for j in 0..n {
                let k_ij = kernel(&points[i], &points[j], &bw, binary);
                num += k_ij * values[j];
                den += k_ij;
                if j == i {
                    self_k = k_ij;
                }
            }
            if den <= 0.0 {
                return f64::INFINITY;
            }
            let fit = num / den;
            rss += (values[i] - fit) * (values[i] - fit);
            trace += self_k / den;
        }
        let denom = n as f64 - trace;
        if denom <= 0.0 {
            return f64::INFINITY;
        }
        n as f64 * rss / (denom * denom)
    });
    for (k, &score) in scores.iter().enumerate() {
        // Ties and near-ties resolve toward the larger (smoother) bandwidth.
        if best.map_or(true, |(s, _)| score <= s) {
            best = Some((score, k));
        }
    }
    let (_, k_best) = best.expect("non-empty grid");
    let c = lo * (hi / lo).powf(k_best as f64 / (grid_len - 1) as f64);
    Ok(BandwidthSelection {
        bandwidths: sd.iter().map(|s| 2.0 * c * s).collect(),
        on_grid_edge: k_best == 0 || k_best == grid_len - 1,
        multiplier: 2.0 * c,
    })
}

/// Fits the conditional-variance field for one source from its
/// (covariates, pseudo-outcome) pairs and bandwidths.
pub fn estimate_sigma2(
    points: Vec<Vec<f64>>,
    values: &[f64],
    bandwidths: Vec<f64>,
    binary: Vec<bool>,
) -> Result<Sigma2Estimator, WeightsError> {
    if points.len() != values.len() || points.is_empty() {
        return Err(WeightsError::InvalidInput("length mismatch".into()));
    }
    if points.len() < MIN_PAIRS {
        return Err(WeightsError::TooFewPairs {
            needed: MIN_PAIRS,
            got: points.len(),
        });
    }
    if bandwidths.iter().any(|&h| !(h > 0.0)) {
        return Err(WeightsError::InvalidInput(
            "bandwidths must be positive".into(),
        ));
    }
    let fallback_variance = sample_variance(values);
    let floor = (FLOOR_FRACTION * fallback_variance).max(ABSOLUTE_FLOOR);
    // Squared residuals about the kernel mean at each sample point.
    let sq_residuals: Vec<f64> = exec::map_indexed(points.len(), |i| {
        let m = nw_mean(&points[i], &points, values, &bandwidths, &binary)
            .unwrap_or(fallback_variance);
        let r = values[i] - m;
        r * r
    });
    Ok(Sigma2Estimator {
        points,
        sq_residuals,
        binary,
        bandwidths,
        floor,
        fallback_variance,
        diagnostics: WeightDiagnostics::default(),
    })
}

impl Sigma2Estimator {
    /// sigma^2 at a query point, floored; falls back to the source-wide
    /// sample variance when the kernel mass underflows.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        match nw_mean(
            x,
            &self.points,
            &self.sq_residuals,
            &self.bandwidths,
            &self.binary,
        ) {
            Some(v) => v.max(self.floor),
            None => self.fallback_variance.max(self.floor),
        }
    }

    /// Like [`Self::value_at`] but counting mass fallbacks.
    pub fn value_at_tracked(&mut self, x: &[f64]) -> f64 {
        match nw_mean(
            x,
            &self.points,
            &self.sq_residuals,
            &self.bandwidths,
            &self.binary,
        ) {
            Some(v) => v.max(self.floor),
            None => {
                self.diagnostics.mass_fallbacks += 1;
                self.fallback_variance.max(self.floor)
            }
        }
    }

    /// sigma^2 at every sample point, in order.
    pub fn at_sample_points(&self) -> Vec<f64> {
        exec::map_indexed(self.points.len(), |i| self.value_at(&self.points[i]))
    }
}

#[allow(clippy::unwrap_used)]
#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn points_1d(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn constant_outcome_hits_the_floor_everywhere() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 10.0).collect();
        let d = vec![2.5; 30];
        let est = estimate_sigma2(points_1d(&xs), &d, vec![0.5], vec![false]).unwrap();
        for x in [0.0, 1.0, 2.9] {
            assert_eq!(est.value_at(&[x]), est.floor);
            assert!(est.floor > 0.0);
        }
    }

    #[test]
    fn huge_bandwidth_recovers_global_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let xs: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<f64> = xs.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let est = estimate_sigma2(points_1d(&xs), &d, vec![1e6], vec![false]).unwrap();
        let global = sample_variance(&d);
        for x in [-0.5, 0.0, 0.7] {
            let rel = (est.value_at(&[x]) - global).abs() / global;
            assert!(rel < 1e-6, "relative error {rel}");
        }
    }

    #[test]
    fn heteroscedastic_data_orders_correctly_across_seeds() {
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..200).map(|_| rng.gen_range(-2.5..2.5)).collect();
            let d: Vec<f64> = xs
                .iter()
                .map(|&x| {
                    let eps: f64 = rng.sample(rand_distr::StandardNormal);
                    eps * (1.0 + x * x)
                })
                .collect();
            let est = estimate_sigma2(points_1d(&xs), &d, vec![0.4], vec![false]).unwrap();
            if est.value_at(&[0.0]) < est.value_at(&[2.0]) {
                hits += 1;
            }
        }
        assert!(hits >= 95, "correct ordering in only {hits}/100 seeds");
    }

    #[test]
    fn bandwidth_selection_is_interior_on_smooth_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 49.0 * 6.0).collect();
        let d: Vec<f64> = xs
            .iter()
            .map(|&x| x.sin() + 0.1 * rng.gen_range(-1.0..1.0))
            .collect();
        let sel = select_bandwidth(&points_1d(&xs), &d, &[false]).unwrap();
        assert!(!sel.on_grid_edge, "edge selection {:?}", sel.bandwidths);
    }

    #[test]
    fn bandwidth_selection_is_stable_under_duplication() {
        // Duplicating every pair multiplies the GCV curve by the tilt
        // 4(n-T(h))^2/(2n-T(h))^2, T the smoother trace, which favors
        // smaller h; the selection therefore moves by a bounded number of
        // grid steps rather than staying put. Three steps bounds it on
        // sharp-signal data across all these seeds.
        let step = (5.0f64 / 0.05).powf(1.0 / 19.0);
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..200).map(|i| i as f64 / 199.0 * 6.0).collect();
            let d: Vec<f64> = xs
                .iter()
                .map(|&x| {
                    (2.0 * x).sin() + 0.3 * rng.sample::<f64, _>(rand_distr::StandardNormal)
                })
                .collect();
            let sel1 = select_bandwidth(&points_1d(&xs), &d, &[false]).unwrap();
            let mut xs2 = xs.clone();
            xs2.extend_from_slice(&xs);
            let mut d2 = d.clone();
            d2.extend_from_slice(&d);
            let sel2 = select_bandwidth(&points_1d(&xs2), &d2, &[false]).unwrap();
            let ratio = (sel2.multiplier / sel1.multiplier).max(sel1.multiplier / sel2.multiplier);
            assert!(
                ratio <= step.powi(3) * 1.0001,
                "seed {seed}: ratio {ratio} beyond three grid steps"
            );
        }
    }

    #[test]
    fn pure_noise_drives_selection_to_the_smoothing_limit() {
        // The GCV curve for pure noise is flat near the smoothing limit to
        // within O(n^{-1/2}), so the exact edge is the modal outcome, not a
        // certainty; selections must still stay in the heavy-smoothing
        // region.
        let mut edge_hits = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..400).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d: Vec<f64> = (0..400)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let sel = select_bandwidth(&points_1d(&xs), &d, &[false]).unwrap();
            if sel.on_grid_edge {
                edge_hits += 1;
                assert_abs_diff_eq!(sel.multiplier, 10.0, epsilon = 1e-12);
            }
            assert!(
                sel.multiplier >= 0.19,
                "seed {seed} collapsed to tiny bandwidth: {}",
                sel.multiplier
            );
        }
        assert!(edge_hits >= 10, "edge selected in only {edge_hits}/20 seeds");
    }

    #[test]
    fn weights_are_invariant_under_row_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<f64> = xs.iter().map(|&x| x + rng.gen_range(-0.3..0.3)).collect();
        let est = estimate_sigma2(points_1d(&xs), &d, vec![0.3], vec![false]).unwrap();
        let mut idx: Vec<usize> = (0..50).collect();
        idx.shuffle(&mut rng);
        let xs_p: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
        let d_p: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
        let est_p = estimate_sigma2(points_1d(&xs_p), &d_p, vec![0.3], vec![false]).unwrap();
        for x in [-0.8, -0.1, 0.4, 0.9] {
            assert_abs_diff_eq!(est.value_at(&[x]), est_p.value_at(&[x]), epsilon = 1e-12);
        }
    }

    #[test]
    fn scaling_outcome_by_k_scales_sigma2_by_k_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let xs: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<f64> = xs.iter().map(|&x| x * x + rng.gen_range(-0.5..0.5)).collect();
        let k = 3.7;
        let dk: Vec<f64> = d.iter().map(|v| k * v).collect();
        let a = estimate_sigma2(points_1d(&xs), &d, vec![0.3], vec![false]).unwrap();
        let b = estimate_sigma2(points_1d(&xs), &dk, vec![0.3], vec![false]).unwrap();
        for x in [-0.7, 0.0, 0.5] {
            let va = a.value_at(&[x]);
            let vb = b.value_at(&[x]);
            assert_abs_diff_eq!(vb, k * k * va, epsilon = 1e-10 * vb.abs().max(1.0));
        }
        // The relative floor scales the same way, so the identity holds even
        // at the floor.
        assert_abs_diff_eq!(b.floor, k * k * a.floor, epsilon = 1e-15 * b.floor);
    }

    #[test]
    fn binary_dims_are_matched_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut points = Vec::new();
        let mut d = Vec::new();
        for i in 0..80 {
            let b = (i % 2) as f64;
            let x = rng.gen_range(-1.0..1.0f64);
            points.push(vec![x, b]);
            // Variance differs sharply by stratum.
            let scale = if b == 1.0 { 4.0 } else { 0.5 };
            d.push(scale * rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
        let est = estimate_sigma2(points, &d, vec![0.5, 1.0], vec![false, true]).unwrap();
        let v0 = est.value_at(&[0.0, 0.0]);
        let v1 = est.value_at(&[0.0, 1.0]);
        assert!(v1 > v0 * 2.0, "strata not separated: {v0} vs {v1}");
    }

    #[test]
    fn too_few_pairs_is_an_error() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let d = vec![1.0; 10];
        assert!(matches!(
            estimate_sigma2(points_1d(&xs), &d, vec![1.0], vec![false]),
            Err(WeightsError::TooFewPairs { .. })
        ));
    }

    #[test]
    fn detect_binary_dims_marks_01_columns() {
        let points = vec![vec![0.0, 0.3], vec![1.0, -0.7], vec![0.0, 1.0]];
        assert_eq!(detect_binary_dims(&points), vec![true, false]);
    }
}


