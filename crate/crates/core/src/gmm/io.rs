use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{DirichletSpec, GaussianSpec};

use super::{GmmData, GmmVariationalState};

/// Responsibilities are dropped from serialized states above this many rows.
pub const RESPONSIBILITY_ELISION_THRESHOLD: usize = 100_000;

pub const GMM_STATE_SCHEMA: &str = "mfvb.gmm_state.v1";

/// One observation per line, coordinates separated by whitespace or commas.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_observations(text: &str) -> Result<GmmData> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| Error::invalid(format!("line {}: bad number {t:?}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    GmmData::new(rows)
}

/// On-disk form of a fitted mixture state.
///
/// ```json
/// { "schema": "mfvb.gmm_state.v1", "k": 2, "d": 1, "n": 3,
///   "weight_concentration": [..], "weights": [..],
///   "means": [[..], ..], "variance_scales": [..],
///   "responsibilities": [[..], ..] | null, "responsibilities_elided": false,
///   "elbo_trace": [..], "iterations": 12, "converged": true }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmStateJson {
    pub schema: String,
    pub k: usize,
    pub d: usize,
    pub n: usize,
    pub weight_concentration: Vec<f64>,
    /// Dirichlet mean of `weight_concentration`.
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variance_scales: Vec<f64>,
    pub responsibilities: Option<Vec<Vec<f64>>>,
    pub responsibilities_elided: bool,
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl GmmStateJson {
    pub fn from_state(state: &GmmVariationalState) -> Self {
        let n = state.responsibilities.len();
        let elided = n > RESPONSIBILITY_ELISION_THRESHOLD;
        Self {
            schema: GMM_STATE_SCHEMA.to_string(),
            k: state.k(),
            d: state.d(),
            n,
            weight_concentration: state.weight_posterior.concentration.clone(),
            weights: state.weight_posterior.mean().into_inner(),
            means: state.component_posteriors.iter().map(|g| g.mean.clone()).collect(),
            variance_scales: state.component_posteriors.iter().map(|g| g.variance_scale).collect(),
            responsibilities: (!elided).then(|| state.responsibilities.clone()),
            responsibilities_elided: elided,
            elbo_trace: state.elbo_trace.clone(),
            iterations: state.iterations,
            converged: state.converged,
        }
    }

    /// Rebuild the state; elided responsibilities come back empty.
    pub fn into_state(self) -> Result<GmmVariationalState> {
        if self.schema != GMM_STATE_SCHEMA {
            return Err(Error::Config { path: "schema".into(), message: format!("unknown schema {}", self.schema) });
        }
        Error::check_len(self.k, self.means.len())?;
        Error::check_len(self.k, self.variance_scales.len())?;
        Ok(GmmVariationalState {
            weight_posterior: DirichletSpec::new(self.weight_concentration)?,
            component_posteriors: self
                .means
                .into_iter()
                .zip(self.variance_scales)
                .map(|(m, s)| GaussianSpec::new(m, s))
                .collect::<Result<_>>()?,
            responsibilities: self.responsibilities.unwrap_or_default(),
            elbo_trace: self.elbo_trace,
            iterations: self.iterations,
            converged: self.converged,
        })
    }
}
