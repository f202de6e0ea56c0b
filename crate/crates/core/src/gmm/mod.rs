//! Isotropic Gaussian mixtures with known unit covariance: simulation,
//! coordinate-ascent variational inference, ELBO and the Ω decomposition.
//!
//! The variational family is `q(pi) q(mu) prod_i q(S_i)` with
//! `q(pi) = Dir(alpha)`, `q(mu_k) = N(m_k, s_k I)` and categorical
//! `q(S_i)`; all three block updates are closed form under the conjugate
//! prior `Dir(alpha_0) x prod_k N(m_0, s_0 I)`.

mod cavi;
mod elbo;
mod io;
mod omega;
mod posterior;
mod simulate;

pub use cavi::{cavi_fit, FitOptions, GmmInit};
pub use elbo::elbo;
pub use io::{parse_observations, GmmStateJson, RESPONSIBILITY_ELISION_THRESHOLD};
pub use omega::{delta_at, omega_decomposition, oracle_q_s, OmegaDecomposition};
pub use posterior::{point_estimate, sample_variational};
pub use simulate::{random_truth, simulate_gmm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::MixingMeasure;
use crate::stats::{DirichletSpec, GaussianSpec};

/// A `K`-component, `d`-dimensional mixture with known truth `theta*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub truth: MixingMeasure,
}

impl GmmModel {
    pub fn new(truth: MixingMeasure) -> Self {
        Self { truth }
    }

    pub fn k(&self) -> usize {
        self.truth.k()
    }

    pub fn d(&self) -> usize {
        self.truth.dim()
    }
}

/// Axis-aligned box `[lower, upper]` standing in for a compact atom support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SupportBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn diameter(&self) -> f64 {
        crate::stats::sq_dist(&self.lower, &self.upper).sqrt()
    }
}

/// Independent priors `p_pi (x) p_mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmPrior {
    pub dirichlet: DirichletSpec,
    /// Shared across components.
    pub mean_prior: GaussianSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_box: Option<SupportBox>,
}

impl GmmPrior {
    pub fn new(dirichlet: DirichletSpec, mean_prior: GaussianSpec, support_box: Option<SupportBox>) -> Result<Self> {
        let p = Self { dirichlet, mean_prior, support_box };
        p.validate()?;
        Ok(p)
    }

    /// `Dir(alpha, ..., alpha)` weights and `N(center, variance I)` means.
    pub fn symmetric(k: usize, alpha: f64, center: Vec<f64>, variance: f64) -> Result<Self> {
        Self::new(DirichletSpec::symmetric(k, alpha)?, GaussianSpec::new(center, variance)?, None)
    }

    pub fn k(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn d(&self) -> usize {
        self.mean_prior.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.dirichlet.validate()?;
        self.mean_prior.validate()?;
        if let Some(b) = &self.support_box {
            Error::check_len(self.d(), b.lower.len())?;
            Error::check_len(self.d(), b.upper.len())?;
            if !b.contains(&self.mean_prior.mean) {
                return Err(Error::invalid("support box must contain the prior mean"));
            }
        }
        Ok(())
    }
}

/// Observations `Y` (n x d) with optional latent labels (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmData {
    pub observations: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_truth: Option<Vec<usize>>,
    pub seed: u64,
}

impl GmmData {
    pub fn new(observations: Vec<Vec<f64>>) -> Result<Self> {
        let data = Self { observations, latent_truth: None, seed: 0 };
        data.validate()?;
        Ok(data)
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn d(&self) -> usize {
        self.observations.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.observations.is_empty() {
            return Err(Error::invalid("data must contain at least one observation"));
        }
        let d = self.d();
        for y in &self.observations {
            Error::check_len(d, y.len())?;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("observations must be finite"));
            }
        }
        if let Some(z) = &self.latent_truth {
            Error::check_len(self.n(), z.len())?;
        }
        Ok(())
    }
}

/// Mean-field state `q(pi) q(mu) prod_i q(S_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmVariationalState {
    pub weight_posterior: DirichletSpec,
    pub component_posteriors: Vec<GaussianSpec>,
    /// `n x K`, rows on the simplex.
    pub responsibilities: Vec<Vec<f64>>,
    pub elbo_trace: Vec<f64>,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default)]
    pub converged: bool,
}

impl GmmVariationalState {
    pub fn k(&self) -> usize {
        self.weight_posterior.len()
    }

    pub fn d(&self) -> usize {
        self.component_posteriors.first().map_or(0, GaussianSpec::dim)
    }

    /// Relabel components: output component `k` is input component `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            weight_posterior: DirichletSpec {
                concentration: perm.iter().map(|&j| self.weight_posterior.concentration[j]).collect(),
            },
            component_posteriors: perm.iter().map(|&j| self.component_posteriors[j].clone()).collect(),
            responsibilities: self
                .responsibilities
                .iter()
                .map(|r| perm.iter().map(|&j| r[j]).collect())
                .collect(),
            elbo_trace: self.elbo_trace.clone(),
            iterations: self.iterations,
            converged: self.converged,
        }
    }

    /// Largest ELBO decrease along the trace (0 if nondecreasing).
    pub fn max_elbo_drop(&self) -> f64 {
        self.elbo_trace
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    /// Count of responsibility rows off the simplex by more than `tol`.
    pub fn invalid_rows(&self, tol: f64) -> usize {
        self.responsibilities
            .iter()
            .filter(|r| (r.iter().sum::<f64>() - 1.0).abs() > tol || r.iter().any(|x| *x < 0.0))
            .count()
    }

    /// Number of component posterior means outside the prior's support box.
    pub fn support_box_violations(&self, prior: &GmmPrior) -> usize {
        prior.support_box.as_ref().map_or(0, |b| {
            self.component_posteriors.iter().filter(|g| !b.contains(&g.mean)).count()
        })
    }
}

/// Adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |n: u64| (n * n.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().flatten().map(|&n| c2(n)).sum();
    let sum_a: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let sum_b: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(a.len() as u64);
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (sum_ij - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_basics() {
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]) - 1.0).abs() < 1e-12);
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!(v < 0.0);
    }

    #[test]
    fn prior_box_must_contain_mean() {
        let bad = GmmPrior::new(
            DirichletSpec::symmetric(2, 1.0).unwrap(),
            GaussianSpec::unit(vec![5.0]),
            Some(SupportBox { lower: vec![0.0], upper: vec![1.0] }),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn empty_data_rejected() {
        assert!(GmmData::new(vec![]).is_err());
    }
}
