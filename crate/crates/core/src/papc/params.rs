//! Step-size validation, the Q-linear rate constant `δ`, parameter tuning
//! and iteration budgets.

use crate::error::{Error, Result};

/// Relative slack on `τσλ_max ≤ 1` absorbing round-off when `σ` is computed
/// as `1/(τλ_max)`.
const BOUNDARY_SLACK: f64 = 1e-12;

/// `(τ, σ)` that passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams {
    pub tau: f64,
    pub sigma: f64,
}

/// Accepts iff `τ ∈ (0, 1/L_f)` and `0 < τσ ≤ 1/λ_max`.
pub fn validate_params(
    tau: f64,
    sigma: f64,
    lipschitz: f64,
    lambda_max: f64,
) -> Result<ValidatedParams> {
    if !(lipschitz > 0.0 && lambda_max > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "need L_f > 0 and lambda_max > 0 (got {lipschitz}, {lambda_max})"
        )));
    }
    if !(tau > 0.0 && tau * lipschitz < 1.0) {
        return Err(Error::ParameterDomain(format!(
            "tau in (0, 1/L_f) violated: tau = {tau}, 1/L_f = {}",
            1.0 / lipschitz
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if tau * sigma * lambda_max > 1.0 + BOUNDARY_SLACK {
        return Err(Error::ParameterDomain(format!(
            "tau*sigma <= 1/||A^T A|| violated: tau*sigma = {}, 1/lambda_max = {}",
            tau * sigma,
            1.0 / lambda_max
        )));
    }
    Ok(ValidatedParams { tau, sigma })
}

/// Q-linear rate constant: `‖u^k − û‖²_H ≤ ‖u^{k−1} − û‖²_H / (1 + δ)` with
///
/// ```text
/// δ = min{ (α−1)τσ(1−τL_f)λ_min / α ,  μτσλ_min / (ατL_f² + σλ_min) }
/// ```
pub fn delta_bound(
    alpha: f64,
    tau: f64,
    sigma: f64,
    lipschitz: f64,
    mu: f64,
    lambda_min: f64,
) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::ParameterDomain(format!(
            "alpha must exceed 1, got {alpha}"
        )));
    }
    if !(tau > 0.0 && tau * lipschitz < 1.0 && sigma > 0.0 && lipschitz > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "delta needs tau in (0, 1/L_f) and sigma > 0 (tau={tau}, sigma={sigma}, L_f={lipschitz})"
        )));
    }
    if !(mu > 0.0 && lambda_min > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "delta needs mu > 0 and lambda_min > 0 (got {mu}, {lambda_min})"
        )));
    }
    let ts = tau * sigma;
    let first = (alpha - 1.0) * ts * (1.0 - tau * lipschitz) * lambda_min / alpha;
    let second = mu * ts * lambda_min / (alpha * tau * lipschitz * lipschitz + sigma * lambda_min);
    Ok(first.min(second))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedParameters {
    pub rho: f64,
    pub tau: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub delta_m: f64,
    /// The two branches of `δ_m` at `ρ`; equal at the optimum.
    pub delta_branches: (f64, f64),
}

fn tuning_cubic(rho: f64, kappa_a: f64, kappa_f: f64) -> f64 {
    ((rho - (1.0 + kappa_a / (2.0 * kappa_f))) * rho - kappa_a) * rho + kappa_a
}

fn delta_m_branches(rho: f64, kappa_a: f64, kappa_f: f64) -> (f64, f64) {
    (
        (rho * rho - kappa_a) * (1.0 - 1.0 / rho) / (rho * rho * kappa_a),
        1.0 / (2.0 * rho * kappa_f),
    )
}

/// Maximizes the rate constant over `(τ, σ, α)` with `σ = 1/(τλ_max)`.
///
/// `ρ = √(κ_𝒜 α)` is the root beyond `√κ_𝒜` of
/// `ρ³ − (1 + κ_𝒜/(2κ_f))ρ² − κ_𝒜ρ + κ_𝒜 = 0`, found by bisection after
/// expanding the upper end geometrically until the cubic changes sign.
pub fn tune_parameters(
    kappa_a: f64,
    kappa_f: f64,
    lipschitz: f64,
    lambda_max: f64,
) -> Result<TunedParameters> {
    if !(kappa_a >= 1.0 && kappa_f >= 1.0 && kappa_a.is_finite() && kappa_f.is_finite()) {
        return Err(Error::ParameterDomain(format!(
            "condition numbers must be finite and >= 1 (kappa_A={kappa_a}, kappa_f={kappa_f})"
        )));
    }
    if !(lipschitz > 0.0 && lambda_max > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "need L_f > 0 and lambda_max > 0 (got {lipschitz}, {lambda_max})"
        )));
    }
    let lo0 = kappa_a.sqrt();
    let cubic = |r: f64| tuning_cubic(r, kappa_a, kappa_f);
    let mut lo = lo0;
    let mut hi = 2.0 * lo0.max(1.0);
    let mut expansions = 0;
    while cubic(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return Err(Error::TuningFailure(format!(
                "no sign change of the tuning cubic up to rho = {hi}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cubic(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    if !(rho > lo0) {
        return Err(Error::TuningFailure(format!(
            "root {rho} not above sqrt(kappa_A) = {lo0}"
        )));
    }
    let tau = 1.0 / (rho * lipschitz);
    let sigma = 1.0 / (tau * lambda_max);
    let alpha = rho * rho / kappa_a;
    let branches = delta_m_branches(rho, kappa_a, kappa_f);
    Ok(TunedParameters {
        rho,
        tau,
        sigma,
        alpha,
        delta_m: branches.0.min(branches.1),
        delta_branches: branches,
    })
}

/// Which iterate sequence an iteration budget targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetTarget {
    /// `‖x^k − x̄‖ ≤ ε`
    Primal,
    /// `‖y^k − ȳ‖_G ≤ ε`
    Dual,
}

/// Iterations sufficient for an `ε`-accurate iterate given `C = ‖u⁰ − ū‖_H`:
/// `⌈2 ln(C/(L_f ε))/δ⌉` (primal) or `⌈2 ln(C/ε)/δ⌉` (dual), natural log;
/// 0 when the logarithm is nonpositive.
pub fn iteration_budget(
    eps: f64,
    c: f64,
    delta: f64,
    lipschitz: f64,
    target: BudgetTarget,
) -> usize {
    let ratio = match target {
        BudgetTarget::Primal => c / (lipschitz * eps),
        BudgetTarget::Dual => c / eps,
    };
    let log = ratio.ln();
    if !(log > 0.0) {
        return 0;
    }
    (2.0 * log / delta).ceil() as usize
}
