use crate::error::{Error, Result};
use crate::papc::problem::SaddleProblem;
use crate::vecops::norm_sq;

/// Weighted primal-dual norm `‖u‖²_H = τ⁻¹‖x‖² + ‖y‖²_G` with
/// `G = σ⁻¹I − τ𝒜ᵀ𝒜` on the stacked dual space.
#[derive(Clone, Copy)]
pub struct HMetric<'a> {
    pub tau: f64,
    pub sigma: f64,
    problem: &'a SaddleProblem,
}

/// Tolerated negative round-off in `⟨y, Gy⟩`, relative to `‖y‖²/σ`.
const PSD_SLACK: f64 = 1e-12;

impl<'a> HMetric<'a> {
    pub fn new(tau: f64, sigma: f64, problem: &'a SaddleProblem) -> Self {
        Self {
            tau,
            sigma,
            problem,
        }
    }

    /// `⟨y, Gy⟩ = ‖y‖²/σ − τ‖𝒜y‖²`, clamped at 0 within round-off.
    pub fn g_form(&self, y: &[Vec<f64>]) -> Result<f64> {
        self.problem.check_dual(y)?;
        let mut ay = vec![0.0; self.problem.primal_dim()];
        self.problem.apply_stacked_adjoint(y, &mut ay);
        let ysq: f64 = y.iter().map(|b| norm_sq(b)).sum();
        g_form_from_parts(ysq, norm_sq(&ay), self.tau, self.sigma)
    }

    pub fn norm_sq(&self, x: &[f64], y: &[Vec<f64>]) -> Result<f64> {
        if x.len() != self.problem.primal_dim() {
            return Err(Error::InvalidDimension(format!(
                "primal part has length {}, expected {}",
                x.len(),
                self.problem.primal_dim()
            )));
        }
        Ok(norm_sq(x) / self.tau + self.g_form(y)?)
    }

    /// `‖u − v‖²_H` for two primal-dual points.
    pub fn dist_sq(&self, x: &[f64], y: &[Vec<f64>], x2: &[f64], y2: &[Vec<f64>]) -> Result<f64> {
        let dx: Vec<f64> = x.iter().zip(x2).map(|(a, b)| a - b).collect();
        let dy: Vec<Vec<f64>> = y
            .iter()
            .zip(y2)
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p - q).collect())
            .collect();
        self.norm_sq(&dx, &dy)
    }
}

pub(crate) fn g_form_from_parts(
    y_norm_sq: f64,
    ay_norm_sq: f64,
    tau: f64,
    sigma: f64,
) -> Result<f64> {
    let scale = y_norm_sq / sigma;
    let v = scale - tau * ay_norm_sq;
    if v < 0.0 {
        if v < -PSD_SLACK * scale.max(1.0) {
            return Err(Error::Metric { value: v });
        }
        return Ok(0.0);
    }
    Ok(v)
}

/// `‖(x, y)‖_H`
pub fn h_norm(x: &[f64], y: &[Vec<f64>], metric: &HMetric<'_>) -> Result<f64> {
    Ok(metric.norm_sq(x, y)?.sqrt())
}
