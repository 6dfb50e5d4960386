use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::TraceRecord;
use crate::papc::metric::g_form_from_parts;
use crate::papc::params::{delta_bound, validate_params, ValidatedParams};
use crate::papc::problem::{IterateState, SaddleProblem};
use crate::papc::report::{
    aposteriori_bound, estimate_rate_default, ConvergenceReport, StopReason,
};
use crate::vecops::{all_finite, dist_sq, norm_sq};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub sigma: f64,
    /// Free parameter `α > 1` of the rate certificate.
    pub alpha: f64,
    pub max_iters: usize,
    /// Threshold on `‖u^{k+1} − u^k‖_H`.
    pub stop_tol: f64,
    pub record_trace: bool,
    pub parallel_dual: bool,
    /// Only consumed by estimation helpers; the iteration is deterministic.
    pub seed: u64,
    /// Iterations without a new minimum step before stopping; 0 disables.
    pub stagnation_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            sigma: 0.5,
            alpha: 2.0,
            max_iters: 1000,
            stop_tol: 1e-8,
            record_trace: true,
            parallel_dual: false,
            seed: 0,
            stagnation_window: 1000,
        }
    }
}

impl SolverConfig {
    /// `τ` given, `σ = 1/(τλ_max(𝒜ᵀ𝒜))`.
    pub fn with_tau(prob: &SaddleProblem, tau: f64) -> Self {
        Self {
            tau,
            sigma: 1.0 / (tau * prob.spectral().lambda_max),
            ..Self::default()
        }
    }

    pub fn validate(&self, prob: &SaddleProblem) -> Result<ValidatedParams> {
        if !(self.alpha > 1.0) {
            return Err(Error::ParameterDomain(format!(
                "alpha must exceed 1, got {}",
                self.alpha
            )));
        }
        validate_params(
            self.tau,
            self.sigma,
            prob.f().lipschitz_grad(),
            prob.spectral().lambda_max,
        )
    }
}

/// Scratch buffers reused across iterations.
struct Workspace {
    grad: Vec<f64>,
    /// `𝒜y` for the current dual iterate.
    ay: Vec<f64>,
    ay_prev: Vec<f64>,
    /// `K_g p` per operator group.
    kp: Vec<Vec<f64>>,
    y_prev: Vec<Vec<f64>>,
    x_prev: Vec<f64>,
}

impl Workspace {
    fn new(prob: &SaddleProblem, state: &IterateState) -> Self {
        let n = prob.primal_dim();
        let mut ay = vec![0.0; n];
        prob.apply_stacked_adjoint(&state.y, &mut ay);
        Self {
            grad: vec![0.0; n],
            ay_prev: ay.clone(),
            ay,
            kp: prob
                .groups()
                .iter()
                .map(|g| vec![0.0; prob.blocks()[g[0]].dim()])
                .collect(),
            y_prev: state.y.clone(),
            x_prev: state.x.clone(),
        }
    }
}

/// Measured increments of one iteration.
#[derive(Debug, Clone, Copy)]
struct StepSizes {
    h: f64,
    primal: f64,
    dual: f64,
}

/// One predictor-corrector iteration in place.
fn step_in_place(
    state: &mut IterateState,
    prob: &SaddleProblem,
    tau: f64,
    sigma: f64,
    parallel: bool,
    ws: &mut Workspace,
) -> Result<StepSizes> {
    ws.x_prev.copy_from_slice(&state.x);
    for (dst, src) in ws.y_prev.iter_mut().zip(&state.y) {
        dst.copy_from_slice(src);
    }
    std::mem::swap(&mut ws.ay, &mut ws.ay_prev);

    // predictor: p = x − τ(∇f(x) + 𝒜y)
    prob.f().gradient_into(&ws.x_prev, &mut ws.grad);
    for i in 0..state.x.len() {
        state.p[i] = ws.x_prev[i] - tau * (ws.grad[i] + ws.ay_prev[i]);
    }

    // dual: y_i ← prox_σ^{g_i*}(y_i + σ K_i p)
    let blocks = prob.blocks();
    let groups = prob.groups();
    let p = &state.p;
    let eval_group = |(gi, kp): (usize, &mut Vec<f64>)| blocks[groups[gi][0]].op.apply_into(p, kp);
    if parallel {
        ws.kp.par_iter_mut().enumerate().for_each(eval_group);
    } else {
        ws.kp.iter_mut().enumerate().for_each(eval_group);
    }
    let mut group_of = vec![0usize; blocks.len()];
    for (gi, g) in groups.iter().enumerate() {
        for &b in g {
            group_of[b] = gi;
        }
    }
    let kp = &ws.kp;
    let update = |(i, yi): (usize, &mut Vec<f64>)| {
        for (v, k) in yi.iter_mut().zip(&kp[group_of[i]]) {
            *v += sigma * k;
        }
        blocks[i].prox.prox_conjugate(yi, sigma);
    };
    if parallel {
        state.y.par_iter_mut().enumerate().for_each(update);
    } else {
        state.y.iter_mut().enumerate().for_each(update);
    }

    // corrector: x = x_prev − τ(∇f(x_prev) + 𝒜y_new), same gradient point
    prob.apply_stacked_adjoint(&state.y, &mut ws.ay);
    for i in 0..state.x.len() {
        state.x[i] = ws.x_prev[i] - tau * (ws.grad[i] + ws.ay[i]);
    }
    state.k += 1;

    if !all_finite(&state.x) || !state.y.iter().all(|b| all_finite(b)) {
        return Err(Error::Divergence { iteration: state.k });
    }

    let dx2 = dist_sq(&state.x, &ws.x_prev);
    let dy2: f64 = state
        .y
        .iter()
        .zip(&ws.y_prev)
        .map(|(a, b)| dist_sq(a, b))
        .sum();
    // 𝒜(y − y_prev) by linearity
    let ady2: f64 = ws
        .ay
        .iter()
        .zip(&ws.ay_prev)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let g = g_form_from_parts(dy2, ady2, tau, sigma)?;
    Ok(StepSizes {
        h: (dx2 / tau + g).sqrt(),
        primal: dx2.sqrt(),
        dual: dy2.sqrt(),
    })
}

/// One PAPC iteration:
///
/// ```text
/// p   = x − τ(∇f(x) + 𝒜y)
/// y_i ← prox_σ^{g_i*}(y_i + σ K_i p)
/// x   ← x − τ(∇f(x) + 𝒜y_new)
/// ```
pub fn papc_step(
    state: &IterateState,
    prob: &SaddleProblem,
    cfg: &SolverConfig,
) -> Result<IterateState> {
    let params = cfg.validate(prob)?;
    check_state(state, prob)?;
    let mut next = state.clone();
    let mut ws = Workspace::new(prob, state);
    step_in_place(
        &mut next,
        prob,
        params.tau,
        params.sigma,
        cfg.parallel_dual,
        &mut ws,
    )?;
    Ok(next)
}

fn check_state(state: &IterateState, prob: &SaddleProblem) -> Result<()> {
    if state.x.len() != prob.primal_dim() || state.p.len() != prob.primal_dim() {
        return Err(Error::InvalidDimension(format!(
            "primal iterate has length {}, expected {}",
            state.x.len(),
            prob.primal_dim()
        )));
    }
    prob.check_dual(&state.y)
}

/// Runs PAPC until the H-step falls below `stop_tol`, the budget is spent
/// or the steps stagnate.
pub fn solve(
    prob: &SaddleProblem,
    cfg: &SolverConfig,
    init: IterateState,
) -> Result<(IterateState, ConvergenceReport)> {
    solve_with_observer(prob, cfg, init, |_| {})
}

/// As [`solve`], calling `observer` with every iterate after it is formed.
pub fn solve_with_observer(
    prob: &SaddleProblem,
    cfg: &SolverConfig,
    init: IterateState,
    mut observer: impl FnMut(&IterateState),
) -> Result<(IterateState, ConvergenceReport)> {
    let params = cfg.validate(prob)?;
    check_state(&init, prob)?;
    let (tau, sigma) = (params.tau, params.sigma);
    let mut state = init;
    let mut ws = Workspace::new(prob, &state);
    let mut steps_h = Vec::with_capacity(cfg.max_iters.min(1 << 20));
    let mut trace = Vec::new();
    if cfg.record_trace {
        let m = prob.monitor(&state.x);
        trace.push(TraceRecord {
            iter: state.k,
            step_h: 0.0,
            primal_step: 0.0,
            dual_step: 0.0,
            objective: m.objective,
            max_violation: m.max_violation,
        });
    }

    let mut stop_reason = StopReason::Budget;
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    for _ in 0..cfg.max_iters {
        let s = step_in_place(&mut state, prob, tau, sigma, cfg.parallel_dual, &mut ws)?;
        if !s.h.is_finite() {
            return Err(Error::Divergence { iteration: state.k });
        }
        observer(&state);
        steps_h.push(s.h);
        if cfg.record_trace {
            let m = prob.monitor(&state.x);
            trace.push(TraceRecord {
                iter: state.k,
                step_h: s.h,
                primal_step: s.primal,
                dual_step: s.dual,
                objective: m.objective,
                max_violation: m.max_violation,
            });
        }
        if s.h <= cfg.stop_tol {
            stop_reason = StopReason::Tolerance;
            break;
        }
        if s.h < best * (1.0 - 1e-12) {
            best = s.h;
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.stagnation_window > 0 && since_best >= cfg.stagnation_window {
                stop_reason = StopReason::Stagnation;
                break;
            }
        }
    }

    let estimated_rate_c = estimate_rate_default(&steps_h);
    let aposteriori = match (estimated_rate_c, steps_h.last()) {
        (Some(c), Some(&last)) => Some(aposteriori_bound(c, last)?),
        _ => None,
    };
    let report = ConvergenceReport {
        iterations_run: steps_h.len(),
        estimated_rate_c,
        delta_certified: certified_delta(prob, cfg),
        aposteriori_bound: aposteriori,
        stop_reason,
        tau,
        sigma,
        alpha: cfg.alpha,
        steps_h,
        trace,
    };
    Ok((state, report))
}

/// `δ` from analytic data only; absent otherwise.
pub fn certified_delta(prob: &SaddleProblem, cfg: &SolverConfig) -> Option<f64> {
    let spec = prob.spectral();
    let mu = prob.f().pqs_constant()?;
    if !spec.certified || spec.lambda_min <= 0.0 {
        return None;
    }
    delta_bound(
        cfg.alpha,
        cfg.tau,
        cfg.sigma,
        prob.f().lipschitz_grad(),
        mu,
        spec.lambda_min,
    )
    .ok()
}

/// `‖∇f(x) + 𝒜y‖`, the residual of the primal optimality condition.
pub fn optimality_residual(prob: &SaddleProblem, x: &[f64], y: &[Vec<f64>]) -> f64 {
    let mut g = prob.f().gradient(x);
    let mut ay = vec![0.0; x.len()];
    prob.apply_stacked_adjoint(y, &mut ay);
    g.iter_mut().zip(&ay).for_each(|(a, b)| *a += b);
    norm_sq(&g).sqrt()
}
