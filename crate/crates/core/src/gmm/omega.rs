use crate::error::{Error, Result};
use crate::measure::MixingMeasure;
use crate::stats::{kl_dirichlet, kl_gaussian_isotropic, log_sum_exp, unit_gaussian_log_density, McEstimate};

use super::{sample_variational, GmmData, GmmPrior, GmmVariationalState};

/// Monte Carlo estimate of the three terms of Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaDecomposition {
    /// `-E_q[l_n(theta) - l_n(theta*)]`
    pub loglik_ratio_term: f64,
    pub loglik_ratio_se: f64,
    /// `E_q[l_n(theta) - l~_n(theta)]`, nonnegative by Jensen.
    pub delta_gap: f64,
    pub delta_gap_se: f64,
    /// `KL(q_theta || p_theta)`, closed form.
    pub kl_to_prior: f64,
}

impl OmegaDecomposition {
    pub fn total(&self) -> f64 {
        self.loglik_ratio_term + self.delta_gap + self.kl_to_prior
    }
}

/// Full conditional of `S_i` at `theta*`:
/// `pi*_s N(Y_i; mu*_s, I) / sum_s' pi*_s' N(Y_i; mu*_s', I)`.
pub fn oracle_q_s(truth: &MixingMeasure, data: &GmmData) -> Result<Vec<Vec<f64>>> {
    Error::check_len(truth.dim(), data.d())?;
    let mut logits = vec![0.0; truth.k()];
    data.observations
        .iter()
        .map(|y| {
            for ((l, w), mu) in logits.iter_mut().zip(truth.weights().as_slice()).zip(truth.atoms()) {
                *l = if *w > 0.0 { w.ln() + unit_gaussian_log_density(y, mu) } else { f64::NEG_INFINITY };
            }
            let lse = log_sum_exp(&logits)?;
            if !lse.is_finite() {
                return Err(Error::invalid("all-zero conditional row"));
            }
            Ok(logits.iter().map(|l| (l - lse).exp()).collect())
        })
        .collect()
}

/// `l_n(theta) - l~_n(theta)` for a fixed `theta` and responsibilities.
///
/// Summed per observation, each term being a Jensen gap `>= 0`.
pub fn delta_at(theta: &MixingMeasure, responsibilities: &[Vec<f64>], data: &GmmData) -> Result<f64> {
    Error::check_len(data.n(), responsibilities.len())?;
    Error::check_len(theta.dim(), data.d())?;
    let mut total = 0.0;
    for (y, r) in data.observations.iter().zip(responsibilities) {
        Error::check_len(theta.k(), r.len())?;
        let exact = theta.mixture_log_density(y);
        let mut lower = 0.0;
        for ((&rs, &ws), mu) in r.iter().zip(theta.weights().as_slice()).zip(theta.atoms()) {
            if rs > 0.0 {
                lower += rs * (ws.max(1e-300).ln() + unit_gaussian_log_density(y, mu) - rs.ln());
            }
        }
        total += exact - lower;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite { iteration: 0, what: "likelihood gap".into() });
    }
    Ok(total)
}

/// Ω terms with `theta ~ q_theta` drawn `theta_samples` times.
pub fn omega_decomposition(
    state: &GmmVariationalState,
    data: &GmmData,
    prior: &GmmPrior,
    truth: &MixingMeasure,
    theta_samples: usize,
    seed: u64,
) -> Result<OmegaDecomposition> {
    if theta_samples == 0 {
        return Err(Error::invalid("theta_samples must be positive"));
    }
    Error::check_len(prior.k(), state.k())?;
    Error::check_len(truth.k(), state.k())?;
    let ll_star = truth.log_likelihood(&data.observations);
    if !ll_star.is_finite() {
        return Err(Error::NonFinite { iteration: 0, what: "log likelihood at truth".into() });
    }
    let thetas = sample_variational(state, theta_samples, seed)?;
    let mut ratios = Vec::with_capacity(theta_samples);
    let mut gaps = Vec::with_capacity(theta_samples);
    for theta in &thetas {
        let ll = theta.log_likelihood(&data.observations);
        if !ll.is_finite() {
            return Err(Error::NonFinite { iteration: 0, what: "log likelihood".into() });
        }
        ratios.push(-(ll - ll_star));
        gaps.push(delta_at(theta, &state.responsibilities, data)?);
    }
    let ratio = McEstimate::from_samples(&ratios);
    let gap = McEstimate::from_samples(&gaps);
    let mut kl = kl_dirichlet(&state.weight_posterior, &prior.dirichlet)?;
    for comp in &state.component_posteriors {
        kl += kl_gaussian_isotropic(comp, &prior.mean_prior)?;
    }
    Ok(OmegaDecomposition {
        loglik_ratio_term: ratio.estimate,
        loglik_ratio_se: ratio.std_error,
        delta_gap: gap.estimate,
        delta_gap_se: gap.std_error,
        kl_to_prior: kl,
    })
}
