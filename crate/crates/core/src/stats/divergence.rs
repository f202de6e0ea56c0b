use crate::error::{Error, Result};

use super::special::{digamma_unchecked, ln_gamma, log_sum_exp};
use super::types::{DirichletSpec, GaussianSpec, SimplexVector};

fn paired<'a>(a: &'a SimplexVector, b: &'a SimplexVector) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    Error::check_len(a.len(), b.len())?;
    Ok(a.as_slice().iter().copied().zip(b.as_slice().iter().copied()))
}

/// Log ratios `log(p*_s / p_s)` over the support of `p_star`.
fn log_ratios(p_star: &SimplexVector, p: &SimplexVector) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(p_star.len());
    for (index, (a, b)) in paired(p_star, p)?.enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::InfiniteDivergence { index, mass: a });
        }
        out.push((a, (a / b).ln()));
    }
    Ok(out)
}

/// `D(p* || p) = sum_s p*_s log(p*_s / p_s)`, with `0 log 0 = 0`.
pub fn kl_categorical(p_star: &SimplexVector, p: &SimplexVector) -> Result<f64> {
    let d: f64 = log_ratios(p_star, p)?.iter().map(|(a, l)| a * l).sum();
    Ok(d.max(0.0))
}

/// Second-moment divergence `V(p* || p) = sum_s p*_s log^2(p*_s / p_s)`.
pub fn v_categorical(p_star: &SimplexVector, p: &SimplexVector) -> Result<f64> {
    Ok(log_ratios(p_star, p)?.iter().map(|(a, l)| a * l * l).sum())
}

/// Squared Hellinger distance `sum_s (sqrt(p_s) - sqrt(q_s))^2`, in `[0, 2]`.
///
/// No 1/2 factor; halve the result for the half-normalized convention.
pub fn hellinger_sq_categorical(p: &SimplexVector, q: &SimplexVector) -> Result<f64> {
    Ok(paired(p, q)?
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum())
}

/// Both sides of the Gibbs variational identity for a discrete base measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCheck {
    /// `log sum_s mu_s exp(h_s)`
    pub lhs: f64,
    /// `sum_s rho_s h_s - D(rho || mu)` at the Gibbs maximizer `rho`.
    pub rhs: f64,
}

/// Evaluate the KL dual representation at its maximizer `rho_s ∝ mu_s e^{h_s}`.
pub fn kl_dual_check(base_probs: &SimplexVector, h_values: &[f64]) -> Result<DualCheck> {
    Error::check_len(base_probs.len(), h_values.len())?;
    if base_probs.as_slice().iter().any(|m| *m <= 0.0) {
        return Err(Error::invalid("base measure must be strictly positive"));
    }
    if h_values.iter().any(|h| !h.is_finite()) {
        return Err(Error::invalid("h values must be finite"));
    }
    let logits: Vec<f64> = base_probs
        .as_slice()
        .iter()
        .zip(h_values)
        .map(|(m, h)| m.ln() + h)
        .collect();
    let lhs = log_sum_exp(&logits)?;
    let rho = SimplexVector::from_weights(&logits.iter().map(|l| (l - lhs).exp()).collect::<Vec<_>>())?;
    let expected_h: f64 = rho.as_slice().iter().zip(h_values).map(|(r, h)| r * h).sum();
    let rhs = expected_h - kl_categorical(&rho, base_probs)?;
    Ok(DualCheck { lhs, rhs })
}

/// `KL(Dir(a) || Dir(b))`.
pub fn kl_dirichlet(a: &DirichletSpec, b: &DirichletSpec) -> Result<f64> {
    Error::check_len(a.len(), b.len())?;
    let a0: f64 = a.concentration.iter().sum();
    let b0: f64 = b.concentration.iter().sum();
    let psi0 = digamma_unchecked(a0);
    let mut kl = ln_gamma(a0) - ln_gamma(b0);
    for (&ak, &bk) in a.concentration.iter().zip(&b.concentration) {
        kl += ln_gamma(bk) - ln_gamma(ak) + (ak - bk) * (digamma_unchecked(ak) - psi0);
    }
    Ok(kl.max(0.0))
}

/// `KL(N(m_a, s_a I) || N(m_b, s_b I))` for isotropic Gaussians.
pub fn kl_gaussian_isotropic(a: &GaussianSpec, b: &GaussianSpec) -> Result<f64> {
    Error::check_len(a.dim(), b.dim())?;
    let d = a.dim() as f64;
    let ratio = a.variance_scale / b.variance_scale;
    let sq = super::sq_dist(&a.mean, &b.mean);
    Ok((0.5 * (d * ratio + sq / b.variance_scale - d - d * ratio.ln())).max(0.0))
}
