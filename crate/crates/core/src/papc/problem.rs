use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functions::SmoothObjective;
use crate::linops::{LinearOperator, SpectralBounds};
use crate::prox::ProxableBlock;
use crate::vecops::axpy;

/// One dual block: the conjugate prox of `g_i` and the operator
/// `K_i = A_iᵀ` mapping the primal space into the block.
pub struct DualBlock {
    pub prox: Box<dyn ProxableBlock>,
    pub op: Arc<dyn LinearOperator>,
}

impl DualBlock {
    pub fn new(prox: impl ProxableBlock + 'static, op: Arc<dyn LinearOperator>) -> Self {
        Self {
            prox: Box::new(prox),
            op,
        }
    }

    pub fn dim(&self) -> usize {
        self.op.codomain_dim()
    }
}

/// Objective value and worst constraint violation at a primal point, used
/// only for traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorValues {
    pub objective: f64,
    pub max_violation: f64,
}

type Monitor = Box<dyn Fn(&[f64]) -> MonitorValues + Send + Sync>;

/// `min_x max_y f(x) + ⟨x, 𝒜y⟩ − Σ g_i*(y_i)` with `𝒜y = Σ K_iᵀ y_i`.
pub struct SaddleProblem {
    f: Box<dyn SmoothObjective>,
    blocks: Vec<DualBlock>,
    spectral: SpectralBounds,
    /// Blocks sharing one operator instance, so `K p` is evaluated once per
    /// group and `Σ K_iᵀ y_i` as `Kᵀ Σ y_i`.
    groups: Vec<Vec<usize>>,
    monitor: Option<Monitor>,
}

impl SaddleProblem {
    /// `spectral` describes `𝒜ᵀ𝒜` on the stacked dual space.
    pub fn new(
        f: Box<dyn SmoothObjective>,
        blocks: Vec<DualBlock>,
        spectral: SpectralBounds,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidDimension(
                "saddle problem needs at least one dual block".into(),
            ));
        }
        let n = f.dim();
        for (i, b) in blocks.iter().enumerate() {
            if b.op.domain_dim() != n {
                return Err(Error::InvalidDimension(format!(
                    "block {i}: operator domain {} != primal dimension {n}",
                    b.op.domain_dim()
                )));
            }
            if b.prox.block_dim() != b.op.codomain_dim() {
                return Err(Error::InvalidDimension(format!(
                    "block {i}: prox dimension {} != operator codomain {}",
                    b.prox.block_dim(),
                    b.op.codomain_dim()
                )));
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, b) in blocks.iter().enumerate() {
            let key = Arc::as_ptr(&b.op) as *const ();
            match groups
                .iter_mut()
                .find(|g| Arc::as_ptr(&blocks[g[0]].op) as *const () == key)
            {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        Ok(Self {
            f,
            blocks,
            spectral,
            groups,
            monitor: None,
        })
    }

    pub fn with_monitor(
        mut self,
        monitor: impl Fn(&[f64]) -> MonitorValues + Send + Sync + 'static,
    ) -> Self {
        self.monitor = Some(Box::new(monitor));
        self
    }

    pub fn f(&self) -> &dyn SmoothObjective {
        self.f.as_ref()
    }

    pub fn blocks(&self) -> &[DualBlock] {
        &self.blocks
    }

    pub fn spectral(&self) -> SpectralBounds {
        self.spectral
    }

    pub fn primal_dim(&self) -> usize {
        self.f.dim()
    }

    pub(crate) fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn monitor(&self, x: &[f64]) -> MonitorValues {
        match &self.monitor {
            Some(m) => m(x),
            None => MonitorValues {
                objective: self.f.value(x),
                max_violation: 0.0,
            },
        }
    }

    pub(crate) fn check_dual(&self, y: &[Vec<f64>]) -> Result<()> {
        if y.len() != self.blocks.len() {
            return Err(Error::InvalidDimension(format!(
                "expected {} dual blocks, got {}",
                self.blocks.len(),
                y.len()
            )));
        }
        for (i, (yi, b)) in y.iter().zip(&self.blocks).enumerate() {
            if yi.len() != b.dim() {
                return Err(Error::InvalidDimension(format!(
                    "dual block {i} has length {}, expected {}",
                    yi.len(),
                    b.dim()
                )));
            }
        }
        Ok(())
    }

    /// `𝒜y = Σ K_iᵀ y_i`, written into `out`.
    pub fn apply_stacked_adjoint(&self, y: &[Vec<f64>], out: &mut [f64]) {
        out.fill(0.0);
        let mut tmp = vec![0.0; out.len()];
        for g in &self.groups {
            let op = &self.blocks[g[0]].op;
            if g.len() == 1 {
                op.apply_adjoint_into(&y[g[0]], &mut tmp);
            } else {
                let mut sum = y[g[0]].clone();
                for &i in &g[1..] {
                    axpy(1.0, &y[i], &mut sum);
                }
                op.apply_adjoint_into(&sum, &mut tmp);
            }
            axpy(1.0, &tmp, out);
        }
    }
}

/// Full algorithm state `u^k = (x^k, y^k)` plus the last predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub k: usize,
}

impl IterateState {
    pub fn zeros(prob: &SaddleProblem) -> Self {
        let n = prob.primal_dim();
        Self {
            x: vec![0.0; n],
            p: vec![0.0; n],
            y: prob.blocks().iter().map(|b| vec![0.0; b.dim()]).collect(),
            k: 0,
        }
    }

    pub fn new(prob: &SaddleProblem, x: Vec<f64>, y: Vec<Vec<f64>>) -> Result<Self> {
        if x.len() != prob.primal_dim() {
            return Err(Error::InvalidDimension(format!(
                "primal iterate has length {}, expected {}",
                x.len(),
                prob.primal_dim()
            )));
        }
        prob.check_dual(&y)?;
        Ok(Self {
            p: x.clone(),
            x,
            y,
            k: 0,
        })
    }
}
