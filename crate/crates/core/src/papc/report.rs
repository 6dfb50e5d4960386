use crate::error::{Error, Result};
use crate::io::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `‖u^{k+1} − u^k‖_H ≤ stop_tol`
    Tolerance,
    /// `max_iters` reached.
    Budget,
    /// The smallest observed step stopped improving.
    Stagnation,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Tolerance => "tolerance",
            StopReason::Budget => "budget",
            StopReason::Stagnation => "stagnation",
        }
    }
}

/// Snapshot of a finished solve.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// `‖u^{k} − u^{k−1}‖_H` for `k = 1..=iterations_run`.
    pub steps_h: Vec<f64>,
    pub estimated_rate_c: Option<f64>,
    /// Certified `δ`; absent unless `μ`, `λ_min > 0` and the spectral
    /// bounds are all analytic.
    pub delta_certified: Option<f64>,
    /// `c/(1−c) · ‖u^{k} − u^{k−1}‖_H` at the last iterate.
    pub aposteriori_bound: Option<f64>,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
    pub tau: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub trace: Vec<TraceRecord>,
}

impl ConvergenceReport {
    pub fn last_step_h(&self) -> Option<f64> {
        self.steps_h.last().copied()
    }
}

/// Fraction of the trace discarded before estimating the rate.
pub const RATE_BURN_IN: f64 = 0.1;
/// Default trailing window for rate estimation.
pub const RATE_WINDOW: usize = 50;

/// Geometric-mean ratio of consecutive entries over the trailing `window`
/// entries of `steps`. Absent if any ratio in the window is `≥ 1`, an entry
/// is zero/subnormal, or fewer than `window` entries exist.
pub fn estimate_rate(steps: &[f64], window: usize) -> Option<f64> {
    if window < 2 || steps.len() < window {
        return None;
    }
    let tail = &steps[steps.len() - window..];
    if tail.iter().any(|s| !s.is_normal() || *s < 0.0) {
        return None;
    }
    if tail.windows(2).any(|w| w[1] >= w[0]) {
        return None;
    }
    let log_sum: f64 = tail.windows(2).map(|w| (w[1] / w[0]).ln()).sum();
    let c = (log_sum / (window - 1) as f64).exp();
    (c > 0.0 && c < 1.0).then_some(c)
}

/// Rate estimate after discarding a 10% burn-in, window `min(50, rest)`.
pub fn estimate_rate_default(steps: &[f64]) -> Option<f64> {
    let burn = (steps.len() as f64 * RATE_BURN_IN).ceil() as usize;
    let rest = &steps[burn.min(steps.len())..];
    estimate_rate(rest, RATE_WINDOW.min(rest.len()))
}

/// `‖u^{k+1} − û‖_H ≤ c/(1−c) · ‖u^{k+1} − u^k‖_H` when later steps contract by `c`.
pub fn aposteriori_bound(c: f64, last_step_h: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::ParameterDomain(format!(
            "rate must lie in (0, 1), got {c}"
        )));
    }
    if !(last_step_h >= 0.0) {
        return Err(Error::ParameterDomain(format!(
            "step must be >= 0, got {last_step_h}"
        )));
    }
    Ok(c * last_step_h / (1.0 - c))
}
