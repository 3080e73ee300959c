//! Pseudo-outcome construction.
//!
//! Trial subjects get the doubly robust pseudo individual treatment effect:
//! the censored outcome is first converted to a complete-data pseudo-outcome
//! by an augmented IPCW transform (IPCW term plus a censoring-martingale
//! augmentation), then propensity-weighted with a regression augmentation.
//! Real-world subjects contribute their restricted observed time directly;
//! the systematic offset that choice induces is absorbed by the bias
//! function downstream.
//!
//! All integrals against fitted survival curves are exact finite sums over
//! the curves' jump points. Censoring-curve evaluations in denominators use
//! the left-continuous version and are floored before inversion.

use crate::cox::CoxModel;
use crate::data::{Dataset, RestrictedRecord, Source};
use crate::exec;
use crate::step::SurvivalCurve;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower bound applied to nuisance survival evaluations before inversion,
/// keeping censoring weights bounded.
pub const SURVIVAL_FLOOR: f64 = 1e-4;

/// Propensity evaluations are clipped into [CLIP, 1-CLIP].
pub const PROPENSITY_CLIP: f64 = 0.01;

#[derive(Debug, Error)]
pub enum PseudoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("transform requires a trial record, got a real-world one")]
    NotTrial,
    #[error("propensity separation: coefficients diverged (|beta| = {0:.1})")]
    Separation(f64),
    #[error("propensity fit needs both treatment arms")]
    OneArm,
}

/// Per-subject pseudo-outcome with an optional diagnostic breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoOutcome {
    pub d_hat: f64,
    pub components: Option<PseudoComponents>,
}

/// Breakdown of the trial-subject transform for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoComponents {
    /// y_L * event / G_C(y_L-)
    pub ipcw: f64,
    /// The censoring-martingale augmentation (subtracted from ipcw).
    pub augmentation: f64,
    /// (A - e)/(e(1-e)) * (T_hat - mu_A)
    pub aipw_correction: f64,
}

/// Treatment propensity: a known randomization constant or a fitted
/// logistic model (with intercept).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PropensityModel {
    Known(f64),
    Logistic { beta: Vec<f64> },
}

impl PropensityModel {
    /// e(x), clipped into [0.01, 0.99].
    pub fn prob(&self, x: &[f64]) -> f64 {
        let raw = match self {
            PropensityModel::Known(e) => *e,
            PropensityModel::Logistic { beta } => {
                let lp = beta[0]
                    + x.iter()
                        .zip(&beta[1..])
                        .map(|(xi, bi)| xi * bi)
                        .sum::<f64>();
                1.0 / (1.0 + (-lp).exp())
            }
        };
        raw.clamp(PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP)
    }
}

/// Fits the propensity model: a known constant when provided, otherwise
/// logistic regression by Newton–Raphson on the Bernoulli log-likelihood.
pub fn fit_propensity(
    rows: &[(Vec<f64>, bool)],
    known: Option<f64>,
) -> Result<PropensityModel, PseudoError> {
    if let Some(e) = known {
        if !(0.0..=1.0).contains(&e) {
            return Err(PseudoError::InvalidInput(format!(
                "known propensity {e} outside [0,1]"
            )));
        }
        return Ok(PropensityModel::Known(e));
    }
    if rows.is_empty() {
        return Err(PseudoError::InvalidInput("no rows".into()));
    }
    let treated_count = rows.iter().filter(|r| r.1).count();
    if treated_count == 0 || treated_count == rows.len() {
        return Err(PseudoError::OneArm);
    }
    let p = rows[0].0.len();
    let d = p + 1;
    let mut beta = nalgebra::DVector::<f64>::zeros(d);
    for _ in 0..100 {
        let mut grad = nalgebra::DVector::<f64>::zeros(d);
        let mut hess = nalgebra::DMatrix::<f64>::zeros(d, d);
        for (x, a) in rows {
            let mut z = Vec::with_capacity(d);
            z.push(1.0);
            z.extend_from_slice(x);
            let lp: f64 = z.iter().zip(beta.iter()).map(|(zi, bi)| zi * bi).sum();
            let mu = 1.0 / (1.0 + (-lp).exp());
            let w = mu * (1.0 - mu);
            let resid = *a as u8 as f64 - mu;
            for i in 0..d {
                grad[i] += resid * z[i];
                for j in 0..d {
                    hess[(i, j)] += w * z[i] * z[j];
                }
            }
        }
        if grad.norm() < 1e-10 {
            break;
        }
        let step = hess
            .clone()
            .cholesky()
            .map(|c| c.solve(&grad))
            .ok_or_else(|| PseudoError::Separation(beta.norm()))?;
        beta += step;
        if beta.norm() > 50.0 {
            return Err(PseudoError::Separation(beta.norm()));
        }
    }
    Ok(PropensityModel::Logistic {
        beta: beta.iter().cloned().collect(),
    })
}

/// Restricted mean survival under the curve: the exact integral of the step
/// function over [0, L].
pub fn mu_hat_curve(gt: &SurvivalCurve, horizon: f64) -> f64 {
    gt.integral(0.0, horizon)
}

/// mu_a(x): restricted mean survival from the fitted failure model at (x, a).
pub fn mu_hat(gt: &CoxModel, x: &[f64], treated: bool, horizon: f64) -> f64 {
    mu_hat_curve(&gt.survival_curve(x, treated), horizon)
}

/// Conditional residual life bound B(t) = t + int_t^L G_T(u) du / G_T(t),
/// with the denominator floored.
pub fn b_of_t(gt: &SurvivalCurve, t: f64, horizon: f64) -> Result<f64, PseudoError> {
    if t > horizon {
        return Err(PseudoError::InvalidInput(format!(
            "t = {t} beyond horizon {horizon}"
        )));
    }
    let denom = gt.value_at(t).max(SURVIVAL_FLOOR);
    Ok(t + gt.integral(t, horizon) / denom)
}

/// The augmented IPCW transform of one restricted trial observation.
///
/// `T_hat = y_L delta / G_C(y_L-) - int_0^L B(t) G_C(t-)^{-1} dM_C(t)` where
/// `M_C = N_C + Q_C`; `N_C` jumps by one at `y_L` iff the restricted event
/// indicator is false, and `Q_C(t)` is the finite sum of
/// `G_C(u-)^{-1} dG_C(u)` over the censoring-curve jumps `u <= min(t, y_L)`.
/// The whole integral is therefore a finite Stieltjes sum over the jump
/// times of `G_C` up to `y_L`, plus the `N_C` atom.
pub fn t_hat_curves(
    y_l: f64,
    event: bool,
    gt: &SurvivalCurve,
    gc: &SurvivalCurve,
    horizon: f64,
) -> Result<(f64, PseudoComponents), PseudoError> {
    if y_l <= 0.0 || y_l > horizon {
        return Err(PseudoError::InvalidInput(format!(
            "restricted time {y_l} outside (0, {horizon}]"
        )));
    }
    let ipcw = if event {
        y_l / gc.value_before(y_l).max(SURVIVAL_FLOOR)
    } else {
        0.0
    };
    let mut augmentation = 0.0;
    // N_C atom at y_L when censored before the horizon.
    if !event {
        let b = b_of_t(gt, y_l, horizon)?;
        augmentation += b / gc.value_before(y_l).max(SURVIVAL_FLOOR);
    }
    // Compensator jumps of G_C at u <= y_L.
    for (u, before, after) in gc.jumps_up_to(y_l) {
        let b = b_of_t(gt, u, horizon)?;
        let g_minus = before.max(SURVIVAL_FLOOR);
        augmentation += b / g_minus * (after - before) / g_minus;
    }
    Ok((
        ipcw - augmentation,
        PseudoComponents {
            ipcw,
            augmentation,
            aipw_correction: 0.0,
        },
    ))
}

/// [`t_hat_curves`] driven by fitted Cox nuisance models at the subject's
/// own covariates and arm.
pub fn t_hat(
    record: &RestrictedRecord,
    gt: &CoxModel,
    gc: &CoxModel,
    horizon: f64,
) -> Result<(f64, PseudoComponents), PseudoError> {
    if record.original.source != Source::Trial {
        return Err(PseudoError::NotTrial);
    }
    let x = &record.original.covariates;
    let a = record.original.treated;
    t_hat_curves(
        record.time,
        record.event,
        &gt.survival_curve(x, a),
        &gc.survival_curve(x, a),
        horizon,
    )
}

/// AIPW pseudo individual treatment effect in single-expression form:
/// `(A - e)/(e(1-e)) (T_hat - mu_A) + mu_1 - mu_0`.
pub fn r_hat(treated: bool, e: f64, t_hat: f64, mu1: f64, mu0: f64) -> f64 {
    let a = treated as u8 as f64;
    let mu_a = if treated { mu1 } else { mu0 };
    (a - e) / (e * (1.0 - e)) * (t_hat - mu_a) + mu1 - mu0
}

/// Fitted nuisance bundle for the trial transform.
pub struct Nuisances<'a> {
    pub failure: &'a CoxModel,
    pub censoring: &'a CoxModel,
    pub propensity: &'a PropensityModel,
}

/// Builds the fused pseudo-outcome for every record: trial subjects get the
/// AIPW pseudo-ITE, real-world subjects their restricted time. The
/// real-world branch reads nothing but the restricted record, so `nuisances`
/// may be `None` for datasets without trial records.
pub fn d_hat_all(
    data: &Dataset,
    restricted: &[RestrictedRecord],
    nuisances: Option<&Nuisances<'_>>,
    horizon: f64,
    keep_components: bool,
) -> Result<Vec<PseudoOutcome>, PseudoError> {
    if restricted.len() != data.len() {
        return Err(PseudoError::InvalidInput(
            "restricted records do not match the dataset".into(),
        ));
    }
    if data.n1() > 0 && nuisances.is_none() {
        return Err(PseudoError::InvalidInput(
            "trial records present but no nuisance models supplied".into(),
        ));
    }
    let results = exec::map_slice(restricted, |rec| match rec.original.source {
        Source::RealWorld => Ok(PseudoOutcome {
            d_hat: rec.time,
            components: None,
        }),
        Source::Trial => {
            let nuis = nuisances.expect("checked above");
            let x = &rec.original.covariates;
            let (t_val, mut comps) = t_hat(rec, nuis.failure, nuis.censoring, horizon)?;
            let e = nuis.propensity.prob(x);
            let mu1 = mu_hat(nuis.failure, x, true, horizon);
            let mu0 = mu_hat(nuis.failure, x, false, horizon);
            let d = r_hat(rec.original.treated, e, t_val, mu1, mu0);
            comps.aipw_correction = d - (mu1 - mu0);
            Ok(PseudoOutcome {
                d_hat: d,
                components: keep_components.then_some(comps),
            })
        }
    });
    results.into_iter().collect()
}
