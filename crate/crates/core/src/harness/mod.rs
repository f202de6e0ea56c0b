//! Experiment configuration, risk sweeps, rate-slope fitting and the
//! property-suite runner.

mod config;
mod io;
mod slope;
mod sweep;
mod verify;

pub use config::{
    read_config, parse_config, write_config, ExperimentConfig, FitSettings, GmmModelConfig, GmmPriorConfig,
    LdaModelConfig, ModelConfig, CONFIG_SCHEMA_VERSION,
};
pub use io::{format_float, read_rows, write_report, write_rows, CsvRowWriter, CSV_HEADER};
pub use slope::{fit_rate_slope, fit_rate_slope_with, median, RateReport, SlopeOptions, ValueKind, BOOTSTRAP_RESAMPLES};
pub use sweep::{run_gmm_sweep, run_lda_sweep, run_sweep, FitDiagnostics, SweepOptions, SweepOutcome};
pub use verify::{
    delta_battery, delta_one_component_control, elbo_battery, hellinger_battery, kl_dual_battery, lemma1_battery, verify_suite, verify_suite_with,
    w1_oracle_battery, Lemma1Battery, SuiteResult, VerifyOptions, VerifyReport, W1Solver, VERIFY_REPORT_SCHEMA,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Distances reported by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AtomError,
    HellingerSq,
    PerWordHellinger,
    W1Sq,
    W2Sq,
    WeightL1,
}

impl Metric {
    pub const ALL: [Metric; 6] =
        [Metric::AtomError, Metric::HellingerSq, Metric::PerWordHellinger, Metric::W1Sq, Metric::W2Sq, Metric::WeightL1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::AtomError => "atom_error",
            Metric::HellingerSq => "hellinger_sq",
            Metric::PerWordHellinger => "per_word_hellinger",
            Metric::W1Sq => "w1_sq",
            Metric::W2Sq => "w2_sq",
            Metric::WeightL1 => "weight_l1",
        }
    }

    pub fn for_gmm(self) -> bool {
        self != Metric::PerWordHellinger
    }

    pub fn for_lda(self) -> bool {
        self == Metric::PerWordHellinger
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown metric {s:?}")))
    }
}

/// Why a row is excluded from slope fits by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    #[default]
    None,
    NotConverged,
    FitFailed,
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::None => "",
            RowFlag::NotConverged => "not_converged",
            RowFlag::FitFailed => "fit_failed",
        }
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        match s {
            "" => Ok(RowFlag::None),
            "not_converged" => Ok(RowFlag::NotConverged),
            "fit_failed" => Ok(RowFlag::FitFailed),
            other => Err(Error::invalid(format!("unknown flag {other:?}"))),
        }
    }

    pub fn is_set(self) -> bool {
        self != RowFlag::None
    }
}

/// One metric for one fitted replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub n: usize,
    pub replicate: usize,
    pub metric: Metric,
    /// Metric at the variational posterior mean.
    pub point_value: f64,
    /// Monte Carlo average of the metric over draws from the variational posterior.
    pub risk_value: f64,
    pub std_error: f64,
    pub elbo_final: f64,
    pub iterations: usize,
    pub seed: u64,
    pub flag: RowFlag,
}
