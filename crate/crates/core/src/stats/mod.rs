//! Probability primitives and divergences shared by every model.

mod divergence;
mod hellinger;
mod special;
mod types;

pub use divergence::{
    hellinger_sq_categorical, kl_categorical, kl_dirichlet, kl_dual_check, kl_gaussian_isotropic,
    v_categorical, DualCheck,
};
pub use hellinger::{hellinger_sq_gaussian, hellinger_sq_mixture_mc, McEstimate};
pub use special::{digamma, ln_gamma, log_sum_exp};
pub use types::{DirichletSpec, GaussianSpec, SimplexVector, SIMPLEX_TOL};

/// `ln(2*pi)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Log density of `N(mean, I_d)` at `y`.
#[inline]
pub fn unit_gaussian_log_density(y: &[f64], mean: &[f64]) -> f64 {
    let sq: f64 = y.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * (y.len() as f64 * LN_2PI + sq)
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
