//! Cox proportional-hazards fitting for the failure-time and censoring-time
//! nuisance models.
//!
//! The partial likelihood uses the Breslow tie convention, maximized by
//! Newton–Raphson with analytic gradient/Hessian and step-halving. The
//! baseline cumulative hazard is the Breslow estimator, so fitted survival
//! curves are exact step functions at observed event times.

use crate::data::{Source, SubjectRecord};
use crate::step::SurvivalCurve;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoxError {
    #[error("degenerate fit: no events in the input")]
    DegenerateFit,
    #[error("did not converge in {max_iter} iterations (last gradient norm {grad_norm:.3e})")]
    NoConvergence { max_iter: usize, grad_norm: f64 },
    #[error("singular Hessian: design is rank deficient on the risk sets")]
    SingularHessian,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{label} model: {source}")]
    Labeled {
        label: &'static str,
        #[source]
        source: Box<CoxError>,
    },
}

/// Maps covariates and treatment onto a Cox design row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    /// Include treatment-by-covariate interaction columns.
    pub interactions: bool,
}

impl Default for DesignSpec {
    fn default() -> Self {
        DesignSpec { interactions: true }
    }
}

impl DesignSpec {
    pub fn width(&self, p: usize) -> usize {
        if self.interactions {
            2 * p + 1
        } else {
            p + 1
        }
    }

    /// Design row: covariates, treatment indicator, then (optionally) the
    /// treatment-covariate interactions.
    pub fn row(&self, covariates: &[f64], treated: bool) -> Vec<f64> {
        let a = treated as u8 as f64;
        let mut row = Vec::with_capacity(self.width(covariates.len()));
        row.extend_from_slice(covariates);
        row.push(a);
        if self.interactions {
            row.extend(covariates.iter().map(|&x| a * x));
        }
        row
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub grad_norm: f64,
}

/// A fitted Cox model: coefficients, Breslow baseline cumulative hazard, and
/// the design mapping used at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel {
    pub beta: Vec<f64>,
    /// Event times of the baseline hazard jumps, strictly increasing.
    baseline_times: Vec<f64>,
    /// Cumulative baseline hazard right after each jump.
    baseline_cumhaz: Vec<f64>,
    pub design: DesignSpec,
    pub report: ConvergenceReport,
    support_end: f64,
}

impl CoxModel {
    /// Baseline cumulative hazard H0(t), right-continuous.
    pub fn baseline_cumhaz(&self, t: f64) -> f64 {
        match self.baseline_times.partition_point(|&tj| tj <= t) {
            0 => 0.0,
            k => self.baseline_cumhaz[k - 1],
        }
    }

    pub fn baseline_jumps(&self) -> (&[f64], &[f64]) {
        (&self.baseline_times, &self.baseline_cumhaz)
    }

    fn linear_predictor(&self, covariates: &[f64], treated: bool) -> f64 {
        self.design
            .row(covariates, treated)
            .iter()
            .zip(&self.beta)
            .map(|(x, b)| x * b)
            .sum()
    }

    /// S(t | x, a) = exp(-H0(t) e^{design(x,a)' beta}), right-continuous.
    pub fn survival_at(&self, covariates: &[f64], treated: bool, t: f64) -> Result<f64, CoxError> {
        if t < 0.0 {
            return Err(CoxError::InvalidInput(format!("negative time {t}")));
        }
        let risk = self.linear_predictor(covariates, treated).exp();
        Ok((-self.baseline_cumhaz(t) * risk).exp())
    }

    /// The full conditional survival curve at (x, a) as a step function.
    pub fn survival_curve(&self, covariates: &[f64], treated: bool) -> SurvivalCurve {
        let risk = self.linear_predictor(covariates, treated).exp();
        let values = self
            .baseline_cumhaz
            .iter()
            .map(|&h| (-h * risk).exp())
            .collect();
        SurvivalCurve::new(self.baseline_times.clone(), values, self.support_end)
            .expect("Breslow baseline is nondecreasing")
    }
}

pub struct CoxOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for CoxOptions {
    fn default() -> Self {
        CoxOptions {
            max_iter: 100,
            grad_tol: 1e-8,
        }
    }
}

struct PartialLikelihood {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// One pass over the (time-descending) data computing the Breslow partial
/// log-likelihood with gradient and Hessian at `beta`.
fn breslow_pass(
    order: &[usize],
    times: &[f64],
    events: &[bool],
    design: &[Vec<f64>],
    beta: &DVector<f64>,
    want_derivs: bool,
) -> PartialLikelihood {
    let d = beta.len();
    let mut s0 = 0.0;
    let mut s1 = DVector::zeros(d);
    let mut s2 = DMatrix::zeros(d, d);
    let mut value = 0.0;
    let mut grad = DVector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);

    let mut i = 0;
    while i < order.len() {
        let t = times[order[i]];
        // Add everyone tied at this time to the risk set.
        let mut j = i;
        while j < order.len() && times[order[j]] == t {
            let idx = order[j];
            let xi = DVector::from_column_slice(&design[idx]);
            let w = beta.dot(&xi).exp();
            s0 += w;
            if want_derivs {
                s1.axpy(w, &xi, 1.0);
                hess_rank1(&mut s2, &xi, w);
            }
            j += 1;
        }
        // Events at this time share the full risk set (Breslow).
        for &idx in &order[i..j] {
            if events[idx] {
                let xi = DVector::from_column_slice(&design[idx]);
                value += beta.dot(&xi) - s0.ln();
                if want_derivs {
                    let mean = &s1 / s0;
                    grad += xi - &mean;
                    // -(S2/S0 - mean mean^T)
                    hess -= &s2 / s0;
                    hess_rank1(&mut hess, &mean, 1.0);
                }
            }
        }
        i = j;
    }
    PartialLikelihood { value, grad, hess }
}

fn hess_rank1(m: &mut DMatrix<f64>, v: &DVector<f64>, w: f64) {
    let d = v.len();
    for r in 0..d {
        for c in 0..d {
            m[(r, c)] += w * v[r] * v[c];
        }
    }
}

/// Fits a Cox model by Newton–Raphson on the Breslow partial likelihood.
///
/// Rows are internally sorted so the result does not depend on input order.
/// Each row is `(time, event, design_row)`; the `spec` is stored on the model
/// for later curve evaluation and must match how the rows were built.
pub fn fit_cox(
    rows: &[(f64, bool, Vec<f64>)],
    spec: DesignSpec,
    opts: &CoxOptions,
) -> Result<CoxModel, CoxError> {
    if rows.is_empty() {
        return Err(CoxError::InvalidInput("no rows".into()));
    }
    let d = rows[0].2.len();
    for (t, _, x) in rows {
        if !t.is_finite() || *t <= 0.0 {
            return Err(CoxError::InvalidInput(format!("bad time {t}")));
        }
        if x.len() != d {
            return Err(CoxError::InvalidInput("ragged design".into()));
        }
    }
    if !rows.iter().any(|r| r.1) {
        return Err(CoxError::DegenerateFit);
    }

    let times: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let events: Vec<bool> = rows.iter().map(|r| r.1).collect();
    let design: Vec<Vec<f64>> = rows.iter().map(|r| r.2.clone()).collect();

    // Deterministic processing order: descending time, events first within a
    // tie, then lexicographic design. Makes summation order, and hence the
    // fit, independent of the caller's row order.
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        times[b]
            .total_cmp(&times[a])
            .then(events[b].cmp(&events[a]))
            .then_with(|| {
                design[a]
                    .iter()
                    .zip(&design[b])
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });

    let mut beta = DVector::zeros(d);
    let mut pl = breslow_pass(&order, &times, &events, &design, &beta, true);
    let mut report = ConvergenceReport {
        iterations: 0,
        grad_norm: pl.grad.norm(),
    };
    let mut converged = report.grad_norm <= opts.grad_tol;
    // One extra Newton step after meeting the tolerance pins beta itself
    // (not just the gradient) to near machine precision.
    let mut polish = !converged;

    for iter in 1..=opts.max_iter {
        if converged {
            if !polish {
                break;
            }
            polish = false;
        }
        let neg_hess = -&pl.hess;
        let step = solve_spd(&neg_hess, &pl.grad).ok_or(CoxError::SingularHessian)?;
        // Step-halving: the partial likelihood must not decrease.
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let candidate = &beta + scale * &step;
            let trial = breslow_pass(&order, &times, &events, &design, &candidate, true);
            if trial.value >= pl.value - 1e-12 {
                accepted = Some((candidate, trial));
                break;
            }
            scale *= 0.5;
        }
        let Some((candidate, trial)) = accepted else {
            return Err(CoxError::NoConvergence {
                max_iter: iter,
                grad_norm: pl.grad.norm(),
            });
        };
        debug_assert!(trial.value >= pl.value - 1e-12);
        beta = candidate;
        pl = trial;
        report = ConvergenceReport {
            iterations: iter,
            grad_norm: pl.grad.norm(),
        };
        converged = report.grad_norm <= opts.grad_tol;
    }
    if !converged {
        return Err(CoxError::NoConvergence {
            max_iter: opts.max_iter,
            grad_norm: report.grad_norm,
        });
    }

    // Breslow baseline: H0 jumps by d_k / S0(t_k) at each event time.
    let risks: Vec<f64> = (0..rows.len())
        .map(|i| {
            design[i]
                .iter()
                .zip(beta.iter())
                .map(|(x, b)| x * b)
                .sum::<f64>()
                .exp()
        })
        .collect();
    let mut baseline_times = Vec::new();
    let mut baseline_cumhaz = Vec::new();
    let mut s0 = 0.0;
    let mut jumps_rev: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let t = times[order[i]];
        let mut j = i;
        let mut d_k = 0usize;
        while j < order.len() && times[order[j]] == t {
            s0 += risks[order[j]];
            if events[order[j]] {
                d_k += 1;
            }
            j += 1;
        }
        if d_k > 0 {
            jumps_rev.push((t, d_k as f64 / s0));
        }
        i = j;
    }
    let mut cum = 0.0;
    for &(t, inc) in jumps_rev.iter().rev() {
        cum += inc;
        baseline_times.push(t);
        baseline_cumhaz.push(cum);
    }

    let support_end = times.iter().cloned().fold(0.0, f64::max);
    Ok(CoxModel {
        beta: beta.iter().cloned().collect(),
        baseline_times,
        baseline_cumhaz,
        design: spec,
        report,
        support_end,
    })
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Some(chol.solve(rhs));
    }
    // Tiny ridge against near-singular risk-set covariance.
    let jitter = 1e-10 * m.trace().abs().max(1.0);
    let mut mj = m.clone();
    for i in 0..m.nrows() {
        mj[(i, i)] += jitter;
    }
    mj.cholesky().map(|c| c.solve(rhs))
}

/// The pair of Cox nuisance fits on trial records: the failure-time model on
/// `(y, event)` and the censoring-time model on `(y, !event)`.
#[derive(Debug, Clone)]
pub struct NuisancePair {
    pub failure: CoxModel,
    pub censoring: CoxModel,
}

/// Fits the failure and censoring Cox models on the trial subset.
///
/// `horizon` only bounds later curve evaluation; both models are fit on the
/// unrestricted observed times.
pub fn fit_nuisance_pair(
    trial: &[SubjectRecord],
    horizon: f64,
    spec: DesignSpec,
    opts: &CoxOptions,
) -> Result<NuisancePair, CoxError> {
    if trial.is_empty() {
        return Err(CoxError::InvalidInput("empty trial subset".into()));
    }
    if horizon <= 0.0 {
        return Err(CoxError::InvalidInput("horizon must be positive".into()));
    }
    debug_assert!(trial.iter().all(|r| r.source == Source::Trial));
    let failure_rows: Vec<(f64, bool, Vec<f64>)> = trial
        .iter()
        .map(|r| (r.time, r.event, spec.row(&r.covariates, r.treated)))
        .collect();
    let censor_rows: Vec<(f64, bool, Vec<f64>)> = trial
        .iter()
        .map(|r| (r.time, !r.event, spec.row(&r.covariates, r.treated)))
        .collect();
    let failure = fit_cox(&failure_rows, spec, opts).map_err(|e| CoxError::Labeled {
        label: "failure-time",
        source: Box::new(e),
    })?;
    let censoring = fit_cox(&censor_rows, spec, opts).map_err(|e| CoxError::Labeled {
        label: "censoring-time",
        source: Box::new(e),
    })?;
    Ok(NuisancePair { failure, censoring })
}

#[allow(clippy::unwrap_used)]
#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Naive Breslow partial log-likelihood over explicit risk sets, used as
    /// the independent oracle.
    fn naive_loglik(rows: &[(f64, bool, Vec<f64>)], beta: &[f64]) -> f64 {
        let lp = |x: &[f64]| x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
        rows.iter()
            .filter(|r| r.1)
            .map(|(t, _, x)| {
                let denom: f64 = rows
                    .iter()
                    .filter(|(tj, _, _)| *tj >= *t)
                    .map(|(_, _, xj)| lp(xj).exp())
                    .sum();
                lp(x) - denom.ln()
            })
            .sum()
    }

    fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = f(c);
        let mut fd = f(d);
        for _ in 0..200 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = f(d);
            }
            if (b - a).abs() < 1e-6 {
                break;
            }
        }
        // Interval methods stall at sqrt(eps) near a quadratic maximum; one
        // parabolic vertex step through equally spaced points recovers ~1e-10.
        let x = 0.5 * (a + b);
        let h = 1e-5;
        let (fl, f0, fr) = (f(x - h), f(x), f(x + h));
        x - 0.5 * h * (fr - fl) / (fr - 2.0 * f0 + fl)
    }

    fn small_rows() -> Vec<(f64, bool, Vec<f64>)> {
        vec![
            (1.0, true, vec![1.0]),
            (2.0, false, vec![0.0]),
            (3.0, true, vec![0.0]),
            (4.0, false, vec![1.0]),
            (5.0, false, vec![0.0]),
        ]
    }

    #[test]
    fn all_censored_is_degenerate() {
        let rows: Vec<_> = small_rows()
            .into_iter()
            .map(|(t, _, x)| (t, false, x))
            .collect();
        match fit_cox(&rows, DesignSpec::default(), &CoxOptions::default()) {
            Err(CoxError::DegenerateFit) => {}
            other => panic!("expected degenerate fit, got {other:?}"),
        }
    }

    #[test]
    fn scalar_fit_matches_golden_section_oracle() {
        let rows = small_rows();
        let model = fit_cox(&rows, DesignSpec::default(), &CoxOptions::default()).unwrap();
        let oracle = golden_section_max(|b| naive_loglik(&rows, &[b]), -10.0, 10.0);
        assert_abs_diff_eq!(model.beta[0], oracle, epsilon = 1e-8);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rows: Vec<(f64, bool, Vec<f64>)> = (0..60)
            .map(|_| {
                (
                    rng.gen_range(0.1..5.0),
                    rng.gen_bool(0.6),
                    vec![rng.gen_range(-1.0..1.0), rng.gen_bool(0.5) as u8 as f64],
                )
            })
            .collect();
        let model = fit_cox(&rows, DesignSpec::default(), &CoxOptions::default()).unwrap();
        // Central differences of the naive log-likelihood around a point off
        // the optimum (gradient is ~0 at the optimum, making relative error
        // meaningless there).
        let beta0: Vec<f64> = model.beta.iter().map(|b| b + 0.3).collect();
        let times: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let events: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let design: Vec<Vec<f64>> = rows.iter().map(|r| r.2.clone()).collect();
        let order: Vec<usize> = {
            let mut o: Vec<usize> = (0..rows.len()).collect();
            o.sort_by(|&a, &b| times[b].total_cmp(&times[a]));
            o
        };
        let pl = breslow_pass(
            &order,
            &times,
            &events,
            &design,
            &DVector::from_column_slice(&beta0),
            true,
        );
        let h = 1e-5;
        for k in 0..beta0.len() {
            let mut plus = beta0.clone();
            let mut minus = beta0.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (naive_loglik(&rows, &plus) - naive_loglik(&rows, &minus)) / (2.0 * h);
            let rel = (pl.grad[k] - fd).abs() / fd.abs().max(1.0);
            assert!(rel < 1e-6, "component {k}: analytic {} vs fd {fd}", pl.grad[k]);
        }
    }

    #[test]
    fn survival_at_zero_is_one_and_unit_exponential_checks() {
        let rows = small_rows();
        let model = fit_cox(&rows, DesignSpec::default(), &CoxOptions::default()).unwrap();
        assert_eq!(model.survival_at(&[0.5], false, 0.0).unwrap(), 1.0);
        assert!(model.survival_at(&[0.5], false, -1.0).is_err());
        // beta = 0, H0(t) = t gives S(t) = exp(-t).
        let unit = CoxModel {
            beta: vec![0.0],
            baseline_times: (1..=1000).map(|k| k as f64 / 100.0).collect(),
            baseline_cumhaz: (1..=1000).map(|k| k as f64 / 100.0).collect(),
            design: DesignSpec::default(),
            report: ConvergenceReport {
                iterations: 0,
                grad_norm: 0.0,
            },
            support_end: 10.0,
        };
        for t in [1.0, 2.5, 7.0] {
            assert_abs_diff_eq!(
                unit.survival_at(&[3.0], false, t).unwrap(),
                (-t).exp(),
                epsilon = 1e-12
            );
        }
    }

    /// Independent Breslow survival estimator: explicit risk-set sums, no
    /// shared code with the fit path.
    fn naive_breslow_survival(
        rows: &[(f64, bool, Vec<f64>)],
        beta: &[f64],
        x: &[f64],
        t: f64,
    ) -> f64 {
        let lp = |v: &[f64]| v.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
        let mut event_times: Vec<f64> = rows.iter().filter(|r| r.1).map(|r| r.0).collect();
        event_times.sort_by(f64::total_cmp);
        event_times.dedup();
        let mut h0 = 0.0;
        for &tk in event_times.iter().filter(|&&tk| tk <= t) {
            let d_k = rows.iter().filter(|(tj, e, _)| *tj == tk && *e).count() as f64;
            let s0: f64 = rows
                .iter()
                .filter(|(tj, _, _)| *tj >= tk)
                .map(|(_, _, xj)| lp(xj).exp())
                .sum();
            h0 += d_k / s0;
        }
        (-h0 * lp(x).exp()).exp()
    }

    #[test]
    fn survival_matches_independent_breslow_implementation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = DesignSpec { interactions: false };
        let rows: Vec<(f64, bool, Vec<f64>)> = (0..80)
            .map(|_| {
                let x = vec![rng.gen_range(-1.0..1.0), rng.gen_bool(0.5) as u8 as f64];
                (rng.gen_range(0.05..4.0), rng.gen_bool(0.65), x)
            })
            .collect();
        let model = fit_cox(&rows, spec, &CoxOptions::default()).unwrap();
        let probe = vec![0.3, 1.0];
        for t in [0.2, 0.8, 1.7, 3.0, 3.9] {
            // The model maps (x, a) through the design; bypass it by feeding
            // the design row directly with a=false appended columns matching.
            let curve_val = {
                let risk: f64 = probe
                    .iter()
                    .chain(std::iter::once(&0.0))
                    .zip(&model.beta)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .exp();
                (-model.baseline_cumhaz(t) * risk).exp()
            };
            let naive = naive_breslow_survival(
                &rows,
                &model.beta,
                &[probe[0], probe[1], 0.0],
                t,
            );
            assert_abs_diff_eq!(curve_val, naive, epsilon = 1e-10);
        }
    }

    #[test]
    fn permuting_rows_leaves_fit_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows: Vec<(f64, bool, Vec<f64>)> = (0..50)
            .map(|_| {
                (
                    rng.gen_range(0.1..3.0),
                    rng.gen_bool(0.7),
                    vec![rng.gen_range(-1.0..1.0)],
                )
            })
            .collect();
        // Duplicate a few times to create exact ties.
        for k in 0..5 {
            rows.push(rows[k].clone());
        }
        let a = fit_cox(&rows, DesignSpec::default(), &CoxOptions::default()).unwrap();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        let b = fit_cox(&shuffled, DesignSpec::default(), &CoxOptions::default()).unwrap();
        for (x, y) in a.beta.iter().zip(&b.beta) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn survival_curve_is_nonincreasing_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<(f64, bool, Vec<f64>)> = (0..70)
            .map(|_| {
                (
                    rng.gen_range(0.1..4.0),
                    rng.gen_bool(0.6),
                    vec![rng.gen_range(-1.0..1.0)],
                )
            })
            .collect();
        let model = fit_cox(&rows, DesignSpec::default(), &CoxOptions::default()).unwrap();
        for _ in 0..100 {
            let x = vec![rng.gen_range(-1.5..1.5)];
            let a = rng.gen_bool(0.5);
            let mut grid: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..5.0)).collect();
            grid.sort_by(f64::total_cmp);
            let mut prev = 1.0 + 1e-15;
            for t in grid {
                let s = model.survival_at(&x, a, t).unwrap();
                assert!(s <= prev + 1e-15 && (0.0..=1.0).contains(&s));
                prev = s;
            }
        }
    }

    #[test]
    fn nuisance_pair_labels_the_failing_model() {
        let trial: Vec<SubjectRecord> = (0..10)
            .map(|i| SubjectRecord {
                time: 1.0 + i as f64,
                event: true,
                covariates: vec![i as f64 / 10.0],
                treated: i % 2 == 0,
                source: Source::Trial,
            })
            .collect();
        match fit_nuisance_pair(&trial, 3.0, DesignSpec::default(), &CoxOptions::default()) {
            Err(CoxError::Labeled { label, source }) => {
                assert_eq!(label, "censoring-time");
                assert!(matches!(*source, CoxError::DegenerateFit));
            }
            other => panic!("expected labeled degenerate error, got {other:?}"),
        }
        let all_censored: Vec<SubjectRecord> = trial
            .iter()
            .map(|r| SubjectRecord {
                event: false,
                ..r.clone()
            })
            .collect();
        match fit_nuisance_pair(
            &all_censored,
            3.0,
            DesignSpec::default(),
            &CoxOptions::default(),
        ) {
            Err(CoxError::Labeled { label, .. }) => assert_eq!(label, "failure-time"),
            other => panic!("expected labeled error, got {other:?}"),
        }
    }
}
