use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lda::LdaTruth;
use crate::measure::MixingMeasure;

use super::Metric;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// A sweep over sample sizes with replicated fits.
///
/// ```json
/// { "schema_version": 1,
///   "model": { "kind": "gmm", "k": 3, "d": 2,
///              "truth": { "weights": [0.4, 0.35, 0.25], "atoms": [[0, 0], [4, 0], [0, 4]] } },
///   "n_grid": [500, 1000], "replicates": 20, "restarts": 5,
///   "metrics": ["w1_sq", "atom_error"], "risk_samples": 200,
///   "master_seed": 1, "output_path": "rows.csv" }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub restarts: usize,
    pub metrics: Vec<Metric>,
    pub risk_samples: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default)]
    pub fit: FitSettings,
    /// Draws used for the Omega decomposition of each mixture fit; 0 skips it.
    #[serde(default)]
    pub omega_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Gmm(GmmModelConfig),
    Lda(LdaModelConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmModelConfig {
    pub k: usize,
    pub d: usize,
    /// Explicit truth; otherwise drawn from the prior with `truth_seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<MixingMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_seed: Option<u64>,
    #[serde(default)]
    pub prior: GmmPriorConfig,
}

/// Symmetric `Dir(alpha)` weights and `N(center, variance I)` atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmPriorConfig {
    pub alpha: f64,
    pub variance: f64,
    /// Defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

impl Default for GmmPriorConfig {
    fn default() -> Self {
        Self { alpha: 1.0, variance: 100.0, center: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaModelConfig {
    pub k: usize,
    pub v: usize,
    pub docs: usize,
    /// Sparsity exponent `c` of the priors `1/V^c`, `1/K^c`.
    #[serde(default = "default_sparsity")]
    pub sparsity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<LdaTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_seed: Option<u64>,
}

fn default_sparsity() -> f64 {
    2.0
}

fn field_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("expected {CONFIG_SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(field_err("n_grid", "needs at least one positive size"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field_err("n_grid", "must be strictly increasing"));
        }
        if self.replicates == 0 {
            return Err(field_err("replicates", "must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(field_err("restarts", "must be at least 1"));
        }
        if self.risk_samples == 0 {
            return Err(field_err("risk_samples", "must be at least 1"));
        }
        if !(self.fit.tol > 0.0) || self.fit.max_iter == 0 {
            return Err(field_err("fit", "tol and max_iter must be positive"));
        }
        if self.metrics.is_empty() {
            return Err(field_err("metrics", "list at least one metric"));
        }
        for (i, m) in self.metrics.iter().enumerate() {
            let ok = match self.model {
                ModelConfig::Gmm(_) => m.for_gmm(),
                ModelConfig::Lda(_) => m.for_lda(),
            };
            if !ok {
                return Err(field_err(&format!("metrics[{i}]"), format!("{m} does not apply to this model")));
            }
            if self.metrics[..i].contains(m) {
                return Err(field_err(&format!("metrics[{i}]"), format!("{m} listed twice")));
            }
        }
        match &self.model {
            ModelConfig::Gmm(g) => {
                if g.k == 0 || g.d == 0 {
                    return Err(field_err("model", "k and d must be positive"));
                }
                if let Some(t) = &g.truth {
                    if t.k() != g.k || t.dim() != g.d {
                        return Err(field_err("model.truth", "shape disagrees with k and d"));
                    }
                } else if g.truth_seed.is_none() {
                    return Err(field_err("model", "give either truth or truth_seed"));
                }
                if !(g.prior.alpha > 0.0) || !(g.prior.variance > 0.0) {
                    return Err(field_err("model.prior", "alpha and variance must be positive"));
                }
                if g.prior.center.as_ref().is_some_and(|c| c.len() != g.d) {
                    return Err(field_err("model.prior.center", "length must equal d"));
                }
            }
            ModelConfig::Lda(l) => {
                if l.k < 2 || l.v < 2 || l.docs == 0 {
                    return Err(field_err("model", "need k >= 2, v >= 2 and docs >= 1"));
                }
                if !(l.sparsity > 1.0) {
                    return Err(field_err("model.sparsity", "must exceed 1"));
                }
                if let Some(t) = &l.truth {
                    if t.k() != l.k || t.v() != l.v || t.num_docs() != l.docs {
                        return Err(field_err("model.truth", "shape disagrees with k, v and docs"));
                    }
                } else if l.truth_seed.is_none() || l.delta0.is_none() {
                    return Err(field_err("model", "give either truth or truth_seed with delta0"));
                }
            }
        }
        Ok(())
    }
}

/// Parse and validate; errors name the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "model" {
            if let Some(inner) = model_error(text) {
                return inner;
            }
        }
        field_err(&path, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

/// The tagged model enum hides nested paths; re-parse the chosen variant
/// on its own to recover them.
fn model_error(text: &str) -> Option<Error> {
    let root: serde_json::Value = serde_json::from_str(text).ok()?;
    let mut model = root.get("model")?.as_object()?.clone();
    let kind = model.remove("kind")?;
    let body = serde_json::Value::Object(model);
    let err = match kind.as_str()? {
        "gmm" => serde_path_to_error::deserialize::<_, GmmModelConfig>(body).err()?,
        "lda" => serde_path_to_error::deserialize::<_, LdaModelConfig>(body).err()?,
        _ => return None,
    };
    Some(field_err(&format!("model.{}", err.path()), err.into_inner().to_string()))
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| field_err(&path.display().to_string(), e.to_string()))?;
    parse_config(&text)
}

pub fn write_config(path: &Path, config: &ExperimentConfig) -> Result<()> {
    let text = serde_json::to_string_pretty(config).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}
