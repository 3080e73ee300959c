//! Right-continuous step survival curves.
//!
//! Cox/Breslow fits produce survival functions that are exact step functions
//! jumping at observed event times. All downstream integrals (restricted
//! means, censoring-martingale sums) are finite sums over these jumps, so the
//! curve stores its jumps explicitly and exposes exact rectangle integration
//! and left limits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StepError {
    #[error("jump times must be finite, positive, and strictly increasing")]
    BadTimes,
    #[error("survival values must lie in [0,1] and be nonincreasing")]
    BadValues,
    #[error("negative evaluation time {0}")]
    NegativeTime(f64),
}

/// A survival curve S(t) with S(0) = 1, right-continuous, nonincreasing,
/// with jumps at `times[k]` down to `values[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    times: Vec<f64>,
    values: Vec<f64>,
    /// Largest time with positive mass information (end of observed support).
    support_end: f64,
}

impl SurvivalCurve {
    /// Builds a curve from strictly increasing jump times and the value the
    /// curve takes at (and after) each jump.
    pub fn new(times: Vec<f64>, values: Vec<f64>, support_end: f64) -> Result<Self, StepError> {
        if times.len() != values.len() {
            return Err(StepError::BadTimes);
        }
        let mut prev_t = 0.0;
        for &t in &times {
            if !t.is_finite() || t <= prev_t {
                return Err(StepError::BadTimes);
            }
            prev_t = t;
        }
        let mut prev_v = 1.0;
        for &v in &values {
            if !v.is_finite() || v < 0.0 || v > prev_v + 1e-12 {
                return Err(StepError::BadValues);
            }
            prev_v = v;
        }
        Ok(SurvivalCurve {
            times,
            values,
            support_end,
        })
    }

    /// A curve identically 1 (no mortality information).
    pub fn constant_one(support_end: f64) -> Self {
        SurvivalCurve {
            times: Vec::new(),
            values: Vec::new(),
            support_end,
        }
    }

    pub fn support_end(&self) -> f64 {
        self.support_end
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    /// S(t), right-continuous.
    pub fn value_at(&self, t: f64) -> f64 {
        // index of last jump time <= t
        match self.times.partition_point(|&tj| tj <= t) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }

    /// S(t-), the left limit at t.
    pub fn value_before(&self, t: f64) -> f64 {
        match self.times.partition_point(|&tj| tj < t) {
            0 => 1.0,
            k => self.values[k - 1],
        }
    }

    /// Exact integral of the step function over [a, b].
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut left = a;
        let mut level = self.value_at(a);
        let start = self.times.partition_point(|&tj| tj <= a);
        for k in start..self.times.len() {
            let tj = self.times[k];
            if tj >= b {
                break;
            }
            total += level * (tj - left);
            left = tj;
            level = self.values[k];
        }
        total += level * (b - left);
        total
    }

    /// Jumps with time in (0, t]: `(time, value_before, value_after)`.
    pub fn jumps_up_to(&self, t: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let end = self.times.partition_point(|&tj| tj <= t);
        (0..end).map(move |k| {
            let before = if k == 0 { 1.0 } else { self.values[k - 1] };
            (self.times[k], before, self.values[k])
        })
    }

    /// Discretizes an arbitrary survival function onto `steps` uniform jumps
    /// over (0, end], taking the function's value at each grid point.
    pub fn from_function<F: Fn(f64) -> f64>(f: F, end: f64, steps: usize) -> Self {
        let mut times = Vec::with_capacity(steps);
        let mut values = Vec::with_capacity(steps);
        for k in 1..=steps {
            let t = end * k as f64 / steps as f64;
            times.push(t);
            values.push(f(t).clamp(0.0, 1.0));
        }
        // Enforce monotonicity against roundoff in the supplied function.
        let mut prev: f64 = 1.0;
        for v in values.iter_mut() {
            *v = v.min(prev);
            prev = *v;
        }
        SurvivalCurve {
            times,
            values,
            support_end: end,
        }
    }
}
