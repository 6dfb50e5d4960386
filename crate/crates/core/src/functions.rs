//! Smooth objectives `f` and the pointwise quadratic supportability (PQS)
//! certificate.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linops::{
    operator_norm_sq, Grad1dDirichlet, Grad2dNeumann, LinearOperator, SpectralBounds,
};
use crate::vecops::{dist_sq, dot, norm, norm_sq};

/// Convex `f` with an `L_f`-Lipschitz gradient.
pub trait SmoothObjective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);
    fn lipschitz_grad(&self) -> f64;

    /// A PQS constant `μ` valid globally, when one is known analytically.
    fn pqs_constant(&self) -> Option<f64> {
        None
    }

    fn label(&self) -> String;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }
}

/// `½‖x − b‖²`; `L_f = μ = 1`.
#[derive(Debug, Clone)]
pub struct QuadraticFidelity {
    b: Vec<f64>,
}

pub fn quadratic_fidelity(b: Vec<f64>) -> QuadraticFidelity {
    QuadraticFidelity { b }
}

impl QuadraticFidelity {
    pub fn data(&self) -> &[f64] {
        &self.b
    }
}

impl SmoothObjective for QuadraticFidelity {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dist_sq(x, &self.b)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), bi) in out.iter_mut().zip(x).zip(&self.b) {
            *o = xi - bi;
        }
    }
    fn lipschitz_grad(&self) -> f64 {
        1.0
    }
    fn pqs_constant(&self) -> Option<f64> {
        Some(1.0)
    }
    fn label(&self) -> String {
        "quadratic_fidelity".into()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "Huber alpha must be positive, got {alpha}"
        )))
    }
}

#[inline]
fn huber_raw(t: f64, alpha: f64) -> f64 {
    if t.abs() <= alpha {
        t * t / (2.0 * alpha)
    } else {
        t.abs() - alpha / 2.0
    }
}

#[inline]
fn huber_grad_raw(t: f64, alpha: f64) -> f64 {
    if t.abs() <= alpha {
        t / alpha
    } else {
        t.signum()
    }
}

/// Huber function `φ_α`.
pub fn huber_value(t: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(huber_raw(t, alpha))
}

pub fn huber_grad(t: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(huber_grad_raw(t, alpha))
}

fn check_modified(alpha: f64, eps: f64) -> Result<()> {
    if 0.0 < eps && eps < alpha && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "modified Huber needs 0 < eps < alpha, got eps={eps}, alpha={alpha}"
        )))
    }
}

#[inline]
fn modified_huber_raw(t: f64, alpha: f64, eps: f64) -> f64 {
    let knee = alpha - eps;
    if (0.0..=knee).contains(&t) {
        ((t + eps).powi(2) - eps * eps) / (2.0 * alpha)
    } else if (-knee..0.0).contains(&t) {
        ((t - eps).powi(2) - eps * eps) / (2.0 * alpha)
    } else {
        t.abs() + (eps - (eps * eps + alpha * alpha) / (2.0 * alpha))
    }
}

#[inline]
fn modified_huber_grad_raw(t: f64, alpha: f64, eps: f64) -> f64 {
    let knee = alpha - eps;
    if t == 0.0 {
        // minimum-norm element of [−ε/α, ε/α]
        0.0
    } else if t > 0.0 && t <= knee {
        (t + eps) / alpha
    } else if t < 0.0 && t >= -knee {
        (t - eps) / alpha
    } else {
        t.signum()
    }
}

/// Modified Huber function: quadratic pieces shifted by `±ε` meeting in a
/// kink at 0, linear beyond `|t| > α − ε`.
pub fn modified_huber_value(t: f64, alpha: f64, eps: f64) -> Result<f64> {
    check_modified(alpha, eps)?;
    Ok(modified_huber_raw(t, alpha, eps))
}

/// Derivative of [`modified_huber_value`] away from 0; at 0 the
/// minimum-norm subgradient (0) is returned.
pub fn modified_huber_grad(t: f64, alpha: f64, eps: f64) -> Result<f64> {
    check_modified(alpha, eps)?;
    Ok(modified_huber_grad_raw(t, alpha, eps))
}

/// Scalar kernels for [`SeparableSum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarKernel {
    Huber {
        alpha: f64,
    },
    ModifiedHuber {
        alpha: f64,
        eps: f64,
    },
    /// `1 − exp(−t²)`: PQS at 0 on bounded sets without being convex.
    GaussianBump,
}

impl ScalarKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarKernel::Huber { alpha } => check_alpha(alpha),
            ScalarKernel::ModifiedHuber { alpha, eps } => check_modified(alpha, eps),
            ScalarKernel::GaussianBump => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ScalarKernel::Huber { alpha } => huber_raw(t, alpha),
            ScalarKernel::ModifiedHuber { alpha, eps } => modified_huber_raw(t, alpha, eps),
            ScalarKernel::GaussianBump => 1.0 - (-t * t).exp(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            ScalarKernel::Huber { alpha } => huber_grad_raw(t, alpha),
            ScalarKernel::ModifiedHuber { alpha, eps } => modified_huber_grad_raw(t, alpha, eps),
            ScalarKernel::GaussianBump => 2.0 * t * (-t * t).exp(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            ScalarKernel::Huber { alpha } | ScalarKernel::ModifiedHuber { alpha, .. } => {
                1.0 / alpha
            }
            ScalarKernel::GaussianBump => 2.0,
        }
    }
}

/// `Σ_i φ(x_i)` for a scalar kernel `φ`.
#[derive(Debug, Clone, Copy)]
pub struct SeparableSum {
    pub dim: usize,
    pub kernel: ScalarKernel,
}

impl SeparableSum {
    pub fn new(dim: usize, kernel: ScalarKernel) -> Result<Self> {
        kernel.validate()?;
        Ok(Self { dim, kernel })
    }
}

impl SmoothObjective for SeparableSum {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.kernel.value(t)).sum()
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(x) {
            *o = self.kernel.derivative(t);
        }
    }
    fn lipschitz_grad(&self) -> f64 {
        self.kernel.lipschitz()
    }
    fn label(&self) -> String {
        format!("separable({:?})", self.kernel)
    }
}

/// `½‖∇x‖²` for a difference operator `∇`.
pub struct DirichletEnergy {
    op: Arc<dyn LinearOperator>,
    lipschitz: f64,
    mu: Option<f64>,
}

impl DirichletEnergy {
    /// `spectrum` describes `∇ᵀ∇` on the primal space. `μ = λ_min` is
    /// recorded only for certified bounds with `λ_min > 0`.
    pub fn new(op: Arc<dyn LinearOperator>, spectrum: SpectralBounds) -> Self {
        let mu = (spectrum.certified && spectrum.lambda_min > 0.0).then_some(spectrum.lambda_min);
        Self {
            op,
            lipschitz: spectrum.lambda_max,
            mu,
        }
    }
}

/// Dirichlet energy for an arbitrary operator, `L_f` from power iteration.
pub fn dirichlet_energy(op: Arc<dyn LinearOperator>) -> Result<DirichletEnergy> {
    let est = operator_norm_sq(op.as_ref(), 5000, 1e-10, 0);
    let spectrum = SpectralBounds::from_estimate(est, 0.0)?;
    Ok(DirichletEnergy::new(op, spectrum))
}

/// `½‖∂x‖²` with the 1D Dirichlet difference; `μ = λ_min(∂ᵀ∂)` exactly.
pub fn dirichlet_energy_1d(n: usize) -> Result<DirichletEnergy> {
    let g = Grad1dDirichlet::new(n)?;
    let spec = g.spectrum();
    Ok(DirichletEnergy::new(Arc::new(g), spec))
}

pub fn dirichlet_energy_2d_neumann(n: usize) -> Result<DirichletEnergy> {
    let g = Grad2dNeumann::new(n)?;
    let spec = g.spectrum();
    Ok(DirichletEnergy::new(Arc::new(g), spec))
}

impl SmoothObjective for DirichletEnergy {
    fn dim(&self) -> usize {
        self.op.domain_dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * norm_sq(&self.op.apply(x))
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let gx = self.op.apply(x);
        self.op.apply_adjoint_into(&gx, out);
    }
    fn lipschitz_grad(&self) -> f64 {
        self.lipschitz
    }
    fn pqs_constant(&self) -> Option<f64> {
        self.mu
    }
    fn label(&self) -> String {
        format!("dirichlet_energy[{}]", self.op.label())
    }
}

/// Huber-smoothed total variation `Σ φ_α((∇x)_k)` over all gradient
/// components; `L_f = ‖∇‖²/α`.
pub struct SmoothedTv {
    op: Arc<dyn LinearOperator>,
    alpha: f64,
    lipschitz: f64,
}

/// `grad_norm_sq` is an upper bound on `‖∇‖²`.
pub fn smoothed_tv_objective(
    grad_op: Arc<dyn LinearOperator>,
    grad_norm_sq: f64,
    alpha: f64,
) -> Result<SmoothedTv> {
    check_alpha(alpha)?;
    Ok(SmoothedTv {
        op: grad_op,
        alpha,
        lipschitz: grad_norm_sq / alpha,
    })
}

impl SmoothObjective for SmoothedTv {
    fn dim(&self) -> usize {
        self.op.domain_dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.op
            .apply(x)
            .iter()
            .map(|&t| huber_raw(t, self.alpha))
            .sum()
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let d: Vec<f64> = self
            .op
            .apply(x)
            .into_iter()
            .map(|t| huber_grad_raw(t, self.alpha))
            .collect();
        self.op.apply_adjoint_into(&d, out);
    }
    fn lipschitz_grad(&self) -> f64 {
        self.lipschitz
    }
    fn label(&self) -> String {
        format!("smoothed_tv[{}, alpha={}]", self.op.label(), self.alpha)
    }
}

// ---------------------------------------------------------------------------
// Certificates and numerical checks

#[derive(Debug, Clone, PartialEq)]
pub struct PqsReport {
    pub pass: bool,
    /// Minimum over samples of `φ(x) − φ(y) − ⟨v, x − y⟩ − (μ/2)‖x − y‖²`.
    pub worst_slack: f64,
    pub worst_point: Vec<f64>,
    pub radius: f64,
    pub mu: f64,
    pub samples: usize,
}

/// Slack tolerance for a passing certificate.
pub const PQS_TOLERANCE: f64 = 1e-12;

/// Checks the quadratic support inequality at `y` with `v = ∇φ(y)`.
pub fn pqs_certificate(
    phi: &dyn SmoothObjective,
    y: &[f64],
    radius: f64,
    mu: f64,
    samples: usize,
    seed: u64,
) -> Result<PqsReport> {
    let v = phi.gradient(y);
    pqs_certificate_with_subgradients(phi, y, &[v], radius, mu, samples, seed)
}

/// As [`pqs_certificate`] but for every supplied subgradient of `φ` at `y`.
///
/// Sample points are `y + r d`: seeded Gaussian directions with radii from a
/// golden-ratio (Kronecker) sequence in `(0, radius]`, plus `±radius` and
/// `±radius/2` along the first coordinate axes.
pub fn pqs_certificate_with_subgradients(
    phi: &dyn SmoothObjective,
    y: &[f64],
    subgradients: &[Vec<f64>],
    radius: f64,
    mu: f64,
    samples: usize,
    seed: u64,
) -> Result<PqsReport> {
    let dim = phi.dim();
    if y.len() != dim || subgradients.iter().any(|v| v.len() != dim) {
        return Err(Error::InvalidDimension(format!(
            "certificate point/subgradients must have length {dim}"
        )));
    }
    if !(radius > 0.0) || !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "certificate needs radius > 0 and mu >= 0 (got {radius}, {mu})"
        )));
    }
    let fy = phi.value(y);
    let mut worst = f64::INFINITY;
    let mut worst_point = y.to_vec();
    let mut check = |x: Vec<f64>| {
        let fx = phi.value(&x);
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let q = 0.5 * mu * norm_sq(&d);
        for v in subgradients {
            let slack = fx - fy - dot(v, &d) - q;
            if slack < worst {
                worst = slack;
                worst_point.clone_from(&x);
            }
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let start: f64 = rng.random();
    for i in 0..samples {
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let nd = norm(&dir);
        if nd == 0.0 {
            continue;
        }
        let frac = (start + i as f64 * golden).fract();
        let r = radius * (1.0 - frac); // in (0, radius]
        dir.iter_mut().for_each(|d| *d *= r / nd);
        check(y.iter().zip(&dir).map(|(a, b)| a + b).collect());
    }
    for axis in 0..dim.min(64) {
        for s in [radius, -radius, 0.5 * radius, -0.5 * radius] {
            let mut x = y.to_vec();
            x[axis] += s;
            check(x);
        }
    }
    Ok(PqsReport {
        pass: worst >= -PQS_TOLERANCE,
        worst_slack: worst,
        worst_point,
        radius,
        mu,
        samples,
    })
}

/// Extends a PQS constant valid on a ball of radius `local_radius` to a ball
/// of radius `radius ≥ local_radius`: `μ δ²/(4R²)`.
pub fn extend_pqs_constant(mu: f64, local_radius: f64, radius: f64) -> f64 {
    if radius <= local_radius {
        mu
    } else {
        mu * local_radius * local_radius / (4.0 * radius * radius)
    }
}

/// Largest relative deviation between the gradient and central differences
/// with step `h`, `max_k |g_fd,k − g_k| / max(1, ‖g‖∞)`.
pub fn gradient_fd_error(phi: &dyn SmoothObjective, x: &[f64], h: f64) -> f64 {
    let g = phi.gradient(x);
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut xp = x.to_vec();
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        xp[k] = x[k] + h;
        let fp = phi.value(&xp);
        xp[k] = x[k] - h;
        let fm = phi.value(&xp);
        xp[k] = x[k];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - g[k]).abs() / scale);
    }
    worst
}

/// Largest sampled ratio `‖∇φ(x) − ∇φ(x′)‖ / ‖x − x′‖` over `pairs` seeded
/// pairs drawn uniformly from `[−scale, scale]^dim`.
pub fn estimate_lipschitz(phi: &dyn SmoothObjective, pairs: usize, scale: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = phi.dim();
    let mut best = 0.0f64;
    for _ in 0..pairs {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..scale)).collect();
        // nearby partner so the sample probes local curvature as well
        let t: f64 = rng.random_range(1e-3..1.0);
        let z: Vec<f64> = x
            .iter()
            .map(|&xi| xi + t * rng.random_range(-scale..scale))
            .collect();
        let gx = phi.gradient(&x);
        let gz = phi.gradient(&z);
        let d = dist_sq(&x, &z).sqrt();
        if d > 0.0 {
            best = best.max(dist_sq(&gx, &gz).sqrt() / d);
        }
    }
    best
}
