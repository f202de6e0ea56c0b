use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::{digamma, log_sum_exp, sq_dist, DirichletSpec, GaussianSpec};

use super::elbo::elbo;
use super::{GmmData, GmmPrior, GmmVariationalState};

/// Stopping rule for coordinate ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Stop when the absolute ELBO improvement of a sweep falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500 }
    }
}

/// Where coordinate ascent starts.
#[derive(Debug, Clone)]
pub enum GmmInit {
    /// Start from an explicit state (its responsibilities are ignored; the
    /// first sweep recomputes them from the parameter blocks).
    State(GmmVariationalState),
    /// k-means++ seeding; the best final ELBO over `restarts` runs wins.
    Seeded { seed: u64, restarts: usize },
}

const RESP_FLOOR: f64 = 1e-300;

impl GmmVariationalState {
    /// `q(S_i)` given `q(pi)` and `q(mu)`.
    pub fn update_responsibilities(&mut self, data: &GmmData) {
        let k = self.k();
        let df = data.d() as f64;
        let alpha_sum: f64 = self.weight_posterior.concentration.iter().sum();
        let psi_sum = digamma(alpha_sum).expect("positive concentration");
        let e_log_pi: Vec<f64> = self
            .weight_posterior
            .concentration
            .iter()
            .map(|&a| digamma(a).expect("positive concentration") - psi_sum)
            .collect();
        let mut logits = vec![0.0; k];
        self.responsibilities.resize(data.n(), vec![0.0; k]);
        for (y, row) in data.observations.iter().zip(self.responsibilities.iter_mut()) {
            for ((l, comp), elp) in logits.iter_mut().zip(&self.component_posteriors).zip(&e_log_pi) {
                *l = elp - 0.5 * (sq_dist(y, &comp.mean) + df * comp.variance_scale);
            }
            let lse = log_sum_exp(&logits).expect("K >= 1");
            row.resize(k, 0.0);
            for (r, l) in row.iter_mut().zip(&logits) {
                let p = (l - lse).exp();
                *r = if p < RESP_FLOOR { 0.0 } else { p };
            }
        }
    }

    /// `q(pi) = Dir(alpha_0 + N)` with `N_k = sum_i r_ik`.
    pub fn update_weights(&mut self, prior: &GmmPrior) {
        let counts = self.counts();
        for ((a, a0), nk) in self
            .weight_posterior
            .concentration
            .iter_mut()
            .zip(&prior.dirichlet.concentration)
            .zip(counts)
        {
            *a = a0 + nk;
        }
    }

    /// `q(mu_k) = N(m_k, s_k I)` with `1/s_k = 1/s_0 + N_k`.
    pub fn update_components(&mut self, data: &GmmData, prior: &GmmPrior) {
        let k = self.k();
        let d = data.d();
        let s0 = prior.mean_prior.variance_scale;
        let mut nk = vec![0.0; k];
        let mut sums = vec![vec![0.0; d]; k];
        for (y, r) in data.observations.iter().zip(&self.responsibilities) {
            for j in 0..k {
                if r[j] == 0.0 {
                    continue;
                }
                nk[j] += r[j];
                for (s, v) in sums[j].iter_mut().zip(y) {
                    *s += r[j] * v;
                }
            }
        }
        for j in 0..k {
            let s = 1.0 / (1.0 / s0 + nk[j]);
            let mean = prior
                .mean_prior
                .mean
                .iter()
                .zip(&sums[j])
                .map(|(m0, sy)| s * (m0 / s0 + sy))
                .collect();
            self.component_posteriors[j] = GaussianSpec { mean, variance_scale: s };
        }
    }

    fn counts(&self) -> Vec<f64> {
        let mut nk = vec![0.0; self.k()];
        for r in &self.responsibilities {
            for (n, x) in nk.iter_mut().zip(r) {
                *n += x;
            }
        }
        nk
    }
}

fn check_inputs(data: &GmmData, prior: &GmmPrior, opts: &FitOptions) -> Result<()> {
    data.validate()?;
    prior.validate()?;
    Error::check_len(prior.d(), data.d())?;
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    if opts.max_iter == 0 {
        return Err(Error::invalid("max_iter must be positive"));
    }
    Ok(())
}

/// Coordinate-ascent VI: responsibilities, then weights, then component
/// means, until the ELBO gain of a sweep drops below `tol`.
pub fn cavi_fit(data: &GmmData, prior: &GmmPrior, init: GmmInit, opts: FitOptions) -> Result<GmmVariationalState> {
    check_inputs(data, prior, &opts)?;
    match init {
        GmmInit::State(state) => {
            Error::check_len(prior.k(), state.k())?;
            Error::check_len(prior.k(), state.component_posteriors.len())?;
            let has_resp = state.responsibilities.len() == data.n()
                && state.responsibilities.iter().all(|r| r.len() == prior.k());
            run(state, data, prior, opts, has_resp)
        }
        GmmInit::Seeded { seed, restarts } => {
            let mut best: Option<GmmVariationalState> = None;
            for restart in 0..restarts.max(1) {
                let state = seeded_state(data, prior, derive_seed(seed, &[restart as u64]))?;
                let fitted = run(state, data, prior, opts, true)?;
                let better = best
                    .as_ref()
                    .is_none_or(|b| fitted.elbo_trace.last() > b.elbo_trace.last());
                if better {
                    best = Some(fitted);
                }
            }
            Ok(best.expect("at least one restart"))
        }
    }
}

fn run(
    mut state: GmmVariationalState,
    data: &GmmData,
    prior: &GmmPrior,
    opts: FitOptions,
    has_responsibilities: bool,
) -> Result<GmmVariationalState> {
    state.elbo_trace.clear();
    if has_responsibilities {
        let e0 = elbo(&state, data, prior)?;
        if !e0.is_finite() {
            return Err(Error::NonFinite { iteration: 0, what: "ELBO".into() });
        }
        state.elbo_trace.push(e0);
    }
    state.converged = false;
    for iter in 1..=opts.max_iter {
        state.update_responsibilities(data);
        state.update_weights(prior);
        state.update_components(data, prior);
        let value = elbo(&state, data, prior)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { iteration: iter, what: "ELBO".into() });
        }
        let prev = state.elbo_trace.last().copied();
        state.elbo_trace.push(value);
        state.iterations = iter;
        if let Some(p) = prev {
            if (value - p).abs() < opts.tol {
                state.converged = true;
                break;
            }
        }
    }
    Ok(state)
}

/// k-means++ seeding followed by soft assignment to the seeds.
fn seeded_state(data: &GmmData, prior: &GmmPrior, seed: u64) -> Result<GmmVariationalState> {
    let k = prior.k();
    let n = data.n();
    let mut rng = stream_rng(seed, 0x4b4d_5050);
    let mut centers: Vec<&[f64]> = Vec::with_capacity(k);
    centers.push(&data.observations[rng.gen_range(0..n)]);
    let mut dist2: Vec<f64> = data.observations.iter().map(|y| sq_dist(y, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist2.iter().sum();
        let idx = if total > 0.0 {
            crate::rng::categorical_draw(&mut rng, &dist2)
        } else {
            rng.gen_range(0..n)
        };
        let c = &data.observations[idx];
        centers.push(c);
        for (d2, y) in dist2.iter_mut().zip(&data.observations) {
            *d2 = d2.min(sq_dist(y, c));
        }
    }
    let mut logits = vec![0.0; k];
    let responsibilities = data
        .observations
        .iter()
        .map(|y| {
            for (l, c) in logits.iter_mut().zip(&centers) {
                *l = -0.5 * sq_dist(y, c);
            }
            let lse = log_sum_exp(&logits).expect("K >= 1");
            logits.iter().map(|l| (l - lse).exp()).collect()
        })
        .collect();
    let mut state = GmmVariationalState {
        weight_posterior: prior.dirichlet.clone(),
        component_posteriors: centers.iter().map(|c| GaussianSpec::unit(c.to_vec())).collect(),
        responsibilities,
        elbo_trace: Vec::new(),
        iterations: 0,
        converged: false,
    };
    state.update_weights(prior);
    state.update_components(data, prior);
    Ok(state)
}

impl GmmVariationalState {
    /// Start state with the given component means, flat responsibilities and
    /// the matching weight posterior.
    pub fn from_means(prior: &GmmPrior, means: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        Error::check_len(prior.k(), means.len())?;
        let k = means.len();
        let share = n as f64 / k as f64;
        Ok(Self {
            weight_posterior: DirichletSpec::new(prior.dirichlet.concentration.iter().map(|a| a + share).collect())?,
            component_posteriors: means
                .into_iter()
                .map(|m| GaussianSpec { mean: m, variance_scale: 1.0 / (1.0 / prior.mean_prior.variance_scale + share) })
                .collect(),
            responsibilities: vec![vec![1.0 / k as f64; k]; n],
            elbo_trace: Vec::new(),
            iterations: 0,
            converged: false,
        })
    }
}
