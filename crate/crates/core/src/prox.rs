//! Proximal maps for the dual step.
//!
//! Every dual block exposes `prox_σ^{g*}` directly. For sets given by a cheap
//! projection the conjugate prox comes from the Moreau identity
//! `prox_σ^{g*}(z) = z − σ prox_{1/σ}^{g}(z/σ)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::vecops::{dot, norm_sq};

/// A dual block `g_i*` that can evaluate its proximal map.
pub trait ProxableBlock: Send + Sync {
    fn block_dim(&self) -> usize;

    /// Overwrites `z` with `prox_σ^{g*}(z)`.
    fn prox_conjugate(&self, z: &mut [f64], sigma: f64);

    fn description(&self) -> String;
}

/// `g = λ‖·‖₁`, so `g*` is the indicator of the ℓ∞ ball of radius λ and its
/// prox is the (σ-independent) componentwise clamp.
#[derive(Debug, Clone, Copy)]
pub struct LinfBallConjugate {
    pub dim: usize,
    pub lambda: f64,
}

impl LinfBallConjugate {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(Self { dim, lambda })
    }
}

impl ProxableBlock for LinfBallConjugate {
    fn block_dim(&self) -> usize {
        self.dim
    }
    fn prox_conjugate(&self, z: &mut [f64], _sigma: f64) {
        clamp_in_place(z, self.lambda);
    }
    fn description(&self) -> String {
        format!("linf_ball(dim={}, lambda={})", self.dim, self.lambda)
    }
}

/// `g ≡ 0`, so `g*` is the indicator of `{0}` and the prox is identically 0.
#[derive(Debug, Clone, Copy)]
pub struct ZeroConjugate {
    pub dim: usize,
}

impl ProxableBlock for ZeroConjugate {
    fn block_dim(&self) -> usize {
        self.dim
    }
    fn prox_conjugate(&self, z: &mut [f64], _sigma: f64) {
        z.fill(0.0);
    }
    fn description(&self) -> String {
        format!("zero(dim={})", self.dim)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// `y/max(1, |y|/λ)` evaluated as a clamp so the bound holds exactly.
fn clamp_in_place(y: &mut [f64], lambda: f64) {
    for v in y {
        *v = v.clamp(-lambda, lambda);
    }
}

/// Componentwise `y_i / max(1, |y_i|/λ)`.
pub fn project_linf_ball(y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_positive("lambda", lambda)?;
    let mut out = y.to_vec();
    clamp_in_place(&mut out, lambda);
    Ok(out)
}

/// `prox_c^{t‖·‖₁}(v)`: shrink every entry towards zero by `c·t`.
pub fn soft_threshold(v: &[f64], threshold: f64) -> Vec<f64> {
    v.iter()
        .map(|&x| x.signum() * (x.abs() - threshold).max(0.0))
        .collect()
}

/// Conjugate prox via the Moreau identity.
///
/// `prox_of_g(v, c)` must return `argmin_u g(u) + ‖u − v‖²/(2c)`.
pub fn prox_conjugate_via_moreau<F>(prox_of_g: F, z: &[f64], sigma: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    check_positive("sigma", sigma)?;
    let scaled: Vec<f64> = z.iter().map(|v| v / sigma).collect();
    let p = prox_of_g(&scaled, 1.0 / sigma);
    if p.len() != z.len() {
        return Err(Error::InvalidDimension(format!(
            "prox returned {} entries for input of length {}",
            p.len(),
            z.len()
        )));
    }
    Ok(z.iter().zip(&p).map(|(zi, pi)| zi - sigma * pi).collect())
}

/// The slab `{y : |⟨ω, y − b⟩| ≤ q}`.
#[derive(Debug, Clone)]
pub struct Slab {
    pub omega: Vec<f64>,
    pub b: Vec<f64>,
    pub q: f64,
}

impl Slab {
    pub fn new(omega: Vec<f64>, b: Vec<f64>, q: f64) -> Result<Self> {
        if omega.len() != b.len() {
            return Err(Error::InvalidDimension(format!(
                "slab weight has length {}, data {}",
                omega.len(),
                b.len()
            )));
        }
        if norm_sq(&omega) == 0.0 {
            return Err(Error::InvalidParameter("slab weight vector is zero".into()));
        }
        check_positive("q", q)?;
        Ok(Self { omega, b, q })
    }

    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        project_slab(y, &self.omega, &self.b, self.q)
    }
}

/// Euclidean projection onto `{y : |⟨ω, y − b⟩| ≤ q}`.
///
/// With `r = ⟨ω, y − b⟩`, points with `|r| ≤ q` are returned unchanged and
/// otherwise `y − ω (r − sign(r) q)/‖ω‖²`.
pub fn project_slab(y: &[f64], omega: &[f64], b: &[f64], q: f64) -> Result<Vec<f64>> {
    if y.len() != omega.len() || y.len() != b.len() {
        return Err(Error::InvalidDimension(format!(
            "slab projection lengths differ: y {}, omega {}, b {}",
            y.len(),
            omega.len(),
            b.len()
        )));
    }
    let w2 = norm_sq(omega);
    if w2 == 0.0 {
        return Err(Error::InvalidParameter("slab weight vector is zero".into()));
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slab half-width must be >= 0, got {q}"
        )));
    }
    let r: f64 = y
        .iter()
        .zip(b)
        .zip(omega)
        .map(|((yi, bi), wi)| wi * (yi - bi))
        .sum();
    if r.abs() <= q {
        return Ok(y.to_vec());
    }
    let shift = (r - r.signum() * q) / w2;
    Ok(y.iter()
        .zip(omega)
        .map(|(yi, wi)| yi - wi * shift)
        .collect())
}

/// One SMRE dual update `v − σ P_C(v/σ)` with `v = y_prev + σ·Ap`.
pub fn smre_dual_prox(y_prev: &[f64], ap: &[f64], sigma: f64, slab: &Slab) -> Result<Vec<f64>> {
    check_positive("sigma", sigma)?;
    if y_prev.len() != ap.len() {
        return Err(Error::InvalidDimension(format!(
            "dual iterate has length {}, Ap {}",
            y_prev.len(),
            ap.len()
        )));
    }
    let v: Vec<f64> = y_prev.iter().zip(ap).map(|(y, a)| y + sigma * a).collect();
    let scaled: Vec<f64> = v.iter().map(|x| x / sigma).collect();
    let p = slab.project(&scaled)?;
    Ok(v.iter().zip(&p).map(|(vi, pi)| vi - sigma * pi).collect())
}

/// Applies each block's conjugate prox to its slice of `zeta`.
///
/// With `parallel` the blocks run on the rayon pool; each block owns a
/// disjoint slice so the result is bitwise identical to the sequential loop.
pub fn prox_separable_product(
    blocks: &[&dyn ProxableBlock],
    zeta: &[f64],
    sigma: f64,
    parallel: bool,
) -> Result<Vec<f64>> {
    let total: usize = blocks.iter().map(|b| b.block_dim()).sum();
    if total != zeta.len() {
        return Err(Error::InvalidDimension(format!(
            "blocks cover {total} entries, input has {}",
            zeta.len()
        )));
    }
    let mut out = zeta.to_vec();
    let mut slices = Vec::with_capacity(blocks.len());
    let mut rest = out.as_mut_slice();
    for b in blocks {
        let (head, tail) = rest.split_at_mut(b.block_dim());
        slices.push(head);
        rest = tail;
    }
    if parallel {
        slices
            .into_par_iter()
            .zip(blocks.par_iter())
            .for_each(|(s, b)| b.prox_conjugate(s, sigma));
    } else {
        for (s, b) in slices.into_iter().zip(blocks) {
            b.prox_conjugate(s, sigma);
        }
    }
    Ok(out)
}

/// `‖P(u) − P(v)‖² − ⟨P(u) − P(v), u − v⟩`; nonpositive for a firmly
/// nonexpansive map.
pub fn firm_nonexpansive_gap(pu: &[f64], pv: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let dp: Vec<f64> = pu.iter().zip(pv).map(|(a, b)| a - b).collect();
    let du: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    norm_sq(&dp) - dot(&dp, &du)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rvec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-scale..scale)).collect()
    }

    #[test]
    fn linf_projection_examples() {
        assert_eq!(project_linf_ball(&[0.2], 0.05).unwrap(), vec![0.05]);
        assert_eq!(
            project_linf_ball(&[3.0, -0.5], 1.0).unwrap(),
            vec![1.0, -0.5]
        );
        assert!(project_linf_ball(&[1.0], 0.0).is_err());
        assert!(project_linf_ball(&[1.0], -1.0).is_err());
    }

    #[test]
    fn linf_projection_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let y = rvec(&mut rng, 7, 3.0);
            let p = project_linf_ball(&y, 0.7).unwrap();
            assert_eq!(project_linf_ball(&p, 0.7).unwrap(), p);
            assert!(p.iter().all(|v| v.abs() <= 0.7));
        }
    }

    #[test]
    fn moreau_for_absolute_value() {
        let out = prox_conjugate_via_moreau(soft_threshold, &[2.0], 1.0).unwrap();
        assert_eq!(out, vec![1.0]);
        let zero = prox_conjugate_via_moreau(soft_threshold, &[0.0], 3.0).unwrap();
        assert_eq!(zero, vec![0.0]);
        assert!(prox_conjugate_via_moreau(|v, _| v.to_vec(), &[1.0], 0.0).is_err());
    }

    #[test]
    fn slab_projection_examples() {
        let p = project_slab(&[3.0, 3.0], &[0.5, 0.5], &[0.0, 0.0], 1.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let inside = [0.3, -0.2];
        assert_eq!(
            project_slab(&inside, &[0.5, 0.5], &[0.0, 0.0], 1.0).unwrap(),
            inside
        );
        assert!(matches!(
            project_slab(&[1.0], &[0.0], &[0.0], 1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(project_slab(&[1.0, 2.0], &[1.0], &[0.0], 1.0).is_err());
    }

    #[test]
    fn slab_tie_returns_input() {
        let y = [1.0, 1.0];
        // r = q exactly
        assert_eq!(project_slab(&y, &[0.5, 0.5], &[0.0, 0.0], 1.0).unwrap(), y);
    }

    #[test]
    fn smre_dual_prox_examples() {
        let slab = Slab::new(vec![0.5, 0.5], vec![0.0, 0.0], 1.0).unwrap();
        let out = smre_dual_prox(&[1.0, 2.0], &[2.0, 1.0], 1.0, &slab).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-15 && (out[1] - 2.0).abs() < 1e-15);
        // v/σ feasible
        let out = smre_dual_prox(&[0.1, 0.0], &[0.0, 0.2], 0.5, &slab).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn smre_dual_prox_matches_generic_moreau() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(1..7);
            let omega: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let b = rvec(&mut rng, n, 1.0);
            let slab = Slab::new(omega, b, rng.random_range(0.01..0.5)).unwrap();
            let y = rvec(&mut rng, n, 2.0);
            let ap = rvec(&mut rng, n, 2.0);
            let sigma = rng.random_range(0.1..5.0);
            let a = smre_dual_prox(&y, &ap, sigma, &slab).unwrap();
            let v: Vec<f64> = y.iter().zip(&ap).map(|(y, a)| y + sigma * a).collect();
            // the prox of an indicator is the projection, whatever the step
            let b = prox_conjugate_via_moreau(|u, _| slab.project(u).unwrap(), &v, sigma).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn separable_product_single_block_and_permutation() {
        let b1 = LinfBallConjugate::new(3, 0.5).unwrap();
        let b2 = ZeroConjugate { dim: 2 };
        let z = [1.0, -0.2, -4.0, 3.0, 1.0];
        let single = prox_separable_product(&[&b1], &z[..3], 1.0, false).unwrap();
        assert_eq!(single, project_linf_ball(&z[..3], 0.5).unwrap());

        let fwd = prox_separable_product(&[&b1, &b2], &z, 1.0, false).unwrap();
        let swapped_in = [3.0, 1.0, 1.0, -0.2, -4.0];
        let rev = prox_separable_product(&[&b2, &b1], &swapped_in, 1.0, true).unwrap();
        assert_eq!(&fwd[..3], &rev[2..]);
        assert_eq!(&fwd[3..], &rev[..2]);

        assert!(prox_separable_product(&[&b1], &z, 1.0, false).is_err());
    }

    #[test]
    fn prox_maps_firmly_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let slab = Slab::new(vec![0.25; 4], vec![0.3, -0.1, 0.0, 0.2], 0.1).unwrap();
        for _ in 0..100 {
            let u = rvec(&mut rng, 4, 3.0);
            let v = rvec(&mut rng, 4, 3.0);
            let gap = firm_nonexpansive_gap(
                &project_linf_ball(&u, 0.4).unwrap(),
                &project_linf_ball(&v, 0.4).unwrap(),
                &u,
                &v,
            );
            assert!(gap <= 1e-10);
            let gap = firm_nonexpansive_gap(
                &slab.project(&u).unwrap(),
                &slab.project(&v).unwrap(),
                &u,
                &v,
            );
            assert!(gap <= 1e-10);
            let sigma = 0.7;
            let pu = smre_dual_prox(&u, &[0.0; 4], sigma, &slab).unwrap();
            let pv = smre_dual_prox(&v, &[0.0; 4], sigma, &slab).unwrap();
            assert!(firm_nonexpansive_gap(&pu, &pv, &u, &v) <= 1e-10);
        }
    }
}
