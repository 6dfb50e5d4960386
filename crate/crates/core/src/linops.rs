//! Matrix-free linear operators.
//!
//! Operators are oriented from the primal space to the dual space, so the
//! block operator of a saddle problem `K_i` satisfies `A_i = K_iᵀ`: the dual
//! step evaluates `K_i p` and the primal step `Σ K_iᵀ y_i`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vecops::{dot, norm, norm_sq};

/// Linear map `ℝ^domain_dim → ℝ^codomain_dim` given only by its action and
/// the action of its adjoint.
///
/// `apply_into` and `apply_adjoint_into` overwrite `out`; both panic when the
/// slice lengths do not match the declared dimensions.
pub trait LinearOperator: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn codomain_dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]);

    fn label(&self) -> String {
        "operator".to_string()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.codomain_dim()];
        self.apply_into(x, &mut out);
        out
    }

    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain_dim()];
        self.apply_adjoint_into(y, &mut out);
        out
    }
}

/// Extreme eigenvalues of a Gram operator `𝒜ᵀ𝒜`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `true` when both values are exact (analytic), `false` for estimates.
    pub certified: bool,
}

impl SpectralBounds {
    /// Safety factor applied to power-iteration estimates of `λ_max`.
    pub const ESTIMATE_INFLATION: f64 = 1.01;

    pub fn analytic(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        Self::checked(lambda_min, lambda_max, true)
    }

    /// Bounds from an iterative estimate of `λ_max` (inflated by 1% so the
    /// step-size condition uses an upper bound) and a best-effort `λ_min`.
    pub fn from_estimate(lambda_max_estimate: f64, lambda_min: f64) -> Result<Self> {
        let lambda_max = lambda_max_estimate * Self::ESTIMATE_INFLATION;
        Self::checked(lambda_min.min(lambda_max), lambda_max, false)
    }

    fn checked(lambda_min: f64, lambda_max: f64, certified: bool) -> Result<Self> {
        if !(lambda_min >= 0.0 && lambda_max > 0.0 && lambda_min <= lambda_max) {
            return Err(Error::InvalidParameter(format!(
                "spectral bounds need 0 <= lambda_min <= lambda_max, lambda_max > 0 \
                 (got {lambda_min}, {lambda_max})"
            )));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
            certified,
        })
    }

    /// Condition number `κ = λ_max/λ_min`, absent when `λ_min = 0`.
    pub fn kappa(&self) -> Option<f64> {
        (self.lambda_min > 0.0).then(|| self.lambda_max / self.lambda_min)
    }
}

/// Square `n×n` field stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::InvalidDimension(format!(
                "field of side {n} needs {} values, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

// ---------------------------------------------------------------------------
// Concrete operators

#[derive(Debug, Clone, Copy)]
pub struct Identity {
    pub n: usize,
}

impl LinearOperator for Identity {
    fn domain_dim(&self) -> usize {
        self.n
    }
    fn codomain_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
    fn label(&self) -> String {
        format!("identity({})", self.n)
    }
}

/// Forward difference with the Dirichlet closure `(∂x)_n = −x_n`.
#[derive(Debug, Clone, Copy)]
pub struct Grad1dDirichlet {
    n: usize,
}

impl Grad1dDirichlet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("1D gradient needs n >= 1".into()));
        }
        Ok(Self { n })
    }

    /// Exact extreme eigenvalues of `∂∂ᵀ` (equivalently `∂ᵀ∂`):
    /// `4 sin²((2k−1)π/(4n+2))`, `k = 1..n`.
    pub fn spectrum(&self) -> SpectralBounds {
        let n = self.n as f64;
        let eig = |k: f64| 4.0 * ((2.0 * k - 1.0) * PI / (4.0 * n + 2.0)).sin().powi(2);
        SpectralBounds {
            lambda_min: eig(1.0),
            lambda_max: eig(n),
            certified: true,
        }
    }
}

impl LinearOperator for Grad1dDirichlet {
    fn domain_dim(&self) -> usize {
        self.n
    }
    fn codomain_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        let n = self.n;
        for i in 0..n - 1 {
            out[i] = x[i + 1] - x[i];
        }
        out[n - 1] = -x[n - 1];
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.n);
        assert_eq!(out.len(), self.n);
        // ∂ᵀ = −div
        out[0] = -y[0];
        for i in 1..self.n {
            out[i] = y[i - 1] - y[i];
        }
    }
    fn label(&self) -> String {
        format!("grad1d_dirichlet({})", self.n)
    }
}

/// Forward differences on an `n×n` field, zero on the last row (component 1)
/// and last column (component 2). Codomain layout: component 1 then 2.
#[derive(Debug, Clone, Copy)]
pub struct Grad2dNeumann {
    n: usize,
}

impl Grad2dNeumann {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!(
                "2D gradient needs n >= 2, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `λ_max(∇ᵀ∇) = 8 sin²((n−1)π/(2n))`; `λ_min = 0` (constants).
    pub fn spectrum(&self) -> SpectralBounds {
        let n = self.n as f64;
        SpectralBounds {
            lambda_min: 0.0,
            lambda_max: 8.0 * ((n - 1.0) * PI / (2.0 * n)).sin().powi(2),
            certified: true,
        }
    }
}

impl LinearOperator for Grad2dNeumann {
    fn domain_dim(&self) -> usize {
        self.n * self.n
    }
    fn codomain_dim(&self) -> usize {
        2 * self.n * self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n * n);
        assert_eq!(out.len(), 2 * n * n);
        let (g1, g2) = out.split_at_mut(n * n);
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                g1[k] = if i + 1 < n { x[k + n] - x[k] } else { 0.0 };
                g2[k] = if j + 1 < n { x[k + 1] - x[k] } else { 0.0 };
            }
        }
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(y.len(), 2 * n * n);
        assert_eq!(out.len(), n * n);
        div2d_into(n, &y[..n * n], &y[n * n..], out);
        out.iter_mut().for_each(|v| *v = -*v);
    }
    fn label(&self) -> String {
        format!("grad2d_neumann({}x{})", self.n, self.n)
    }
}

fn div2d_into(n: usize, y1: &[f64], y2: &[f64], out: &mut [f64]) {
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let mut d = 0.0;
            if i + 1 < n {
                d += y1[k];
            }
            if i > 0 {
                d -= y1[k - n];
            }
            if j + 1 < n {
                d += y2[k];
            }
            if j > 0 {
                d -= y2[k - 1];
            }
            out[k] = d;
        }
    }
}

/// Zero-padded, same-size 2D convolution with a `k×k` kernel centred at
/// `(k/2, k/2)`. The adjoint is correlation with the same kernel.
#[derive(Debug, Clone)]
pub struct Convolution2d {
    n: usize,
    k: usize,
    kernel: Vec<f64>,
}

impl Convolution2d {
    pub fn new(n: usize, kernel: Field) -> Result<Self> {
        let k = kernel.n();
        if k > n {
            return Err(Error::InvalidDimension(format!(
                "kernel side {k} exceeds image side {n}"
            )));
        }
        if kernel.as_slice().iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "PSF entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            n,
            k,
            kernel: kernel.into_vec(),
        })
    }

    pub fn kernel_side(&self) -> usize {
        self.k
    }

    fn run(&self, x: &[f64], out: &mut [f64], adjoint: bool) {
        let (n, k) = (self.n as isize, self.k as isize);
        assert_eq!(x.len(), (n * n) as usize);
        assert_eq!(out.len(), (n * n) as usize);
        let c = k / 2;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for a in 0..k {
                    // convolution reads x[i - (a - c)], the adjoint x[i + (a - c)]
                    let di = if adjoint { a - c } else { c - a };
                    let r = i + di;
                    if r < 0 || r >= n {
                        continue;
                    }
                    for b in 0..k {
                        let dj = if adjoint { b - c } else { c - b };
                        let s = j + dj;
                        if s < 0 || s >= n {
                            continue;
                        }
                        acc += self.kernel[(a * k + b) as usize] * x[(r * n + s) as usize];
                    }
                }
                out[(i * n + j) as usize] = acc;
            }
        }
    }
}

impl LinearOperator for Convolution2d {
    fn domain_dim(&self) -> usize {
        self.n * self.n
    }
    fn codomain_dim(&self) -> usize {
        self.n * self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.run(x, out, false);
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.run(y, out, true);
    }
    fn label(&self) -> String {
        format!("psf_conv({}x{}, k={})", self.n, self.n, self.k)
    }
}

// ---------------------------------------------------------------------------
// Checked free functions

pub fn grad1d_dirichlet(x: &[f64]) -> Result<Vec<f64>> {
    Ok(Grad1dDirichlet::new(x.len())?.apply(x))
}

/// `(∂*y)_1 = y_1`, `(∂*y)_i = y_i − y_{i−1}`; equals `−∂ᵀ`.
pub fn div1d_dirichlet(y: &[f64]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::InvalidDimension("1D divergence needs n >= 1".into()));
    }
    let mut out = Vec::with_capacity(y.len());
    out.push(y[0]);
    out.extend(y.windows(2).map(|w| w[1] - w[0]));
    Ok(out)
}

pub fn grad2d_neumann(x: &Field) -> Result<(Field, Field)> {
    let n = x.n();
    let g = Grad2dNeumann::new(n)?.apply(x.as_slice());
    let (g1, g2) = g.split_at(n * n);
    Ok((Field::new(n, g1.to_vec())?, Field::new(n, g2.to_vec())?))
}

/// Negative adjoint of [`grad2d_neumann`].
pub fn div2d_neumann(y1: &Field, y2: &Field) -> Result<Field> {
    let n = y1.n();
    if y2.n() != n {
        return Err(Error::InvalidDimension(format!(
            "divergence components have sides {} and {}",
            n,
            y2.n()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "2D divergence needs n >= 2, got {n}"
        )));
    }
    let mut out = vec![0.0; n * n];
    div2d_into(n, y1.as_slice(), y2.as_slice(), &mut out);
    Field::new(n, out)
}

pub fn convolve_psf(x: &Field, psf: &Field) -> Result<Field> {
    let op = Convolution2d::new(x.n(), psf.clone())?;
    Field::new(x.n(), op.apply(x.as_slice()))
}

/// Smallest eigenvalue `4 sin²(π/(2n+2))` of the 1D Dirichlet negative
/// Laplacian `tridiag(−1, 2, −1)`.
pub fn laplacian_min_eig_1d(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension("Laplacian needs n >= 1".into()));
    }
    Ok(4.0 * (PI / (2.0 * n as f64 + 2.0)).sin().powi(2))
}

/// `|⟨Ax, y⟩ − ⟨x, Aᵀy⟩|`
pub fn adjoint_residual(op: &dyn LinearOperator, x: &[f64], y: &[f64]) -> f64 {
    (dot(&op.apply(x), y) - dot(x, &op.apply_adjoint(y))).abs()
}

fn seeded_unit_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Power-iteration estimate of `λ_max(opᵀop) = ‖op‖²`.
///
/// Stops when the Rayleigh quotient changes by at most `tol` (relative) or
/// after `max_iters` iterations. Returns the raw estimate, which is a lower
/// bound; see [`SpectralBounds::from_estimate`] for the inflated upper bound.
/// A zero operator yields 0.
pub fn operator_norm_sq(op: &dyn LinearOperator, max_iters: usize, tol: f64, seed: u64) -> f64 {
    let max_iters = max_iters.max(1);
    let mut v = seeded_unit_vector(op.domain_dim(), seed);
    let mut w = vec![0.0; op.codomain_dim()];
    let mut z = vec![0.0; op.domain_dim()];
    let mut rq = 0.0;
    for _ in 0..max_iters {
        op.apply_into(&v, &mut w);
        let next = norm_sq(&w);
        op.apply_adjoint_into(&w, &mut z);
        let nz = norm(&z);
        if nz == 0.0 || next == 0.0 {
            return 0.0;
        }
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = zi / nz;
        }
        let done = (next - rq).abs() <= tol * next;
        rq = next;
        if done {
            break;
        }
    }
    // Rayleigh quotient at the final normalized iterate
    op.apply_into(&v, &mut w);
    norm_sq(&w).max(rq)
}

/// Which Gram operator an eigenvalue query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramSide {
    /// `opᵀ op` on the domain.
    Domain,
    /// `op opᵀ` on the codomain (the dual-space Gram `𝒜ᵀ𝒜` when `op` maps
    /// primal to dual).
    Codomain,
}

fn gram_apply(
    op: &dyn LinearOperator,
    side: GramSide,
    v: &[f64],
    tmp: &mut [f64],
    out: &mut [f64],
) {
    match side {
        GramSide::Domain => {
            op.apply_into(v, tmp);
            op.apply_adjoint_into(tmp, out);
        }
        GramSide::Codomain => {
            op.apply_adjoint_into(v, tmp);
            op.apply_into(tmp, out);
        }
    }
}

/// Inverse-iteration estimate of the smallest Gram eigenvalue, with each
/// linear solve done by conjugate gradients. Returns 0 when the Gram
/// operator is (numerically) singular. The value is never certified.
pub fn gram_min_eig(
    op: &dyn LinearOperator,
    side: GramSide,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> f64 {
    let (dim, other) = match side {
        GramSide::Domain => (op.domain_dim(), op.codomain_dim()),
        GramSide::Codomain => (op.codomain_dim(), op.domain_dim()),
    };
    if dim > other {
        // rank deficient by dimension count
        return 0.0;
    }
    let scale = operator_norm_sq(op, 200, 1e-6, seed).max(f64::MIN_POSITIVE);
    let mut v = seeded_unit_vector(dim, seed);
    let mut tmp = vec![0.0; other];
    let mut lambda = f64::INFINITY;
    for _ in 0..max_iters.max(1) {
        let Some(w) = conjugate_gradient(op, side, &v, dim * 4, 1e-12, scale) else {
            return 0.0;
        };
        let nw = norm(&w);
        if !(nw.is_finite()) || nw == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / nw).collect();
        let mut gv = vec![0.0; dim];
        gram_apply(op, side, &v, &mut tmp, &mut gv);
        let next = dot(&v, &gv);
        let done = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if lambda <= 1e-14 * scale {
            return 0.0;
        }
        if done {
            break;
        }
    }
    lambda.max(0.0)
}

fn conjugate_gradient(
    op: &dyn LinearOperator,
    side: GramSide,
    rhs: &[f64],
    max_iters: usize,
    tol: f64,
    scale: f64,
) -> Option<Vec<f64>> {
    let dim = rhs.len();
    let other = op.domain_dim() + op.codomain_dim() - dim;
    let mut tmp = vec![0.0; other];
    let mut x = vec![0.0; dim];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; dim];
    let mut rs = norm_sq(&r);
    let target = tol * tol * rs;
    for _ in 0..max_iters {
        if rs <= target {
            break;
        }
        gram_apply(op, side, &p, &mut tmp, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 1e-15 * scale * norm_sq(&p) {
            return None;
        }
        let a = rs / pap;
        for i in 0..dim {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rs_next = norm_sq(&r);
        let beta = rs_next / rs;
        for i in 0..dim {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_next;
    }
    Some(x)
}
