use crate::error::{Error, Result};
use crate::stats::{digamma, ln_gamma, sq_dist, LN_2PI};

use super::{GmmData, GmmPrior, GmmVariationalState};

/// `E_q[log p(Y, S, pi, mu)] - E_q[log q]`, in closed form.
pub fn elbo(state: &GmmVariationalState, data: &GmmData, prior: &GmmPrior) -> Result<f64> {
    let k = state.k();
    let d = data.d();
    Error::check_len(prior.k(), k)?;
    Error::check_len(prior.d(), d)?;
    Error::check_len(k, state.component_posteriors.len())?;
    Error::check_len(data.n(), state.responsibilities.len())?;
    if state.d() != d {
        return Err(Error::DimensionMismatch { expected: d, got: state.d() });
    }
    let df = d as f64;
    let alpha = &state.weight_posterior.concentration;
    let alpha0 = &prior.dirichlet.concentration;
    let alpha_sum: f64 = alpha.iter().sum();
    let psi_sum = digamma(alpha_sum)?;
    let e_log_pi: Vec<f64> = alpha.iter().map(|&a| digamma(a).map(|p| p - psi_sum)).collect::<Result<_>>()?;

    // E[log p(Y | S, mu)] + E[log p(S | pi)] + H[q(S)]
    let mut local = 0.0;
    for (y, r) in data.observations.iter().zip(&state.responsibilities) {
        Error::check_len(k, r.len())?;
        for ((&rk, comp), &elp) in r.iter().zip(&state.component_posteriors).zip(&e_log_pi) {
            if rk <= 0.0 {
                continue;
            }
            let e_loglik = -0.5 * (df * LN_2PI + sq_dist(y, &comp.mean) + df * comp.variance_scale);
            local += rk * (e_loglik + elp - rk.max(1e-300).ln());
        }
    }

    // E[log p(pi)] - E[log q(pi)]
    let alpha0_sum: f64 = alpha0.iter().sum();
    let mut weights_term = ln_gamma(alpha0_sum) - ln_gamma(alpha_sum);
    for ((&a0, &a), &elp) in alpha0.iter().zip(alpha).zip(&e_log_pi) {
        weights_term += ln_gamma(a) - ln_gamma(a0) + (a0 - a) * elp;
    }

    // E[log p(mu)] - E[log q(mu)]
    let s0 = prior.mean_prior.variance_scale;
    let mut means_term = 0.0;
    for comp in &state.component_posteriors {
        let s = comp.variance_scale;
        means_term += -0.5 * df * (s0 / s).ln() - (sq_dist(&comp.mean, &prior.mean_prior.mean) + df * s) / (2.0 * s0)
            + 0.5 * df;
    }

    Ok(local + weights_term + means_term)
}
