//! Run configuration: a JSON document with an optional `profile` table and
//! command parameters. Every field is optional.
//!
//! | key                  | default                                   |
//! |----------------------|-------------------------------------------|
//! | `profile`            | baseline scenario (six clients, 1 km)     |
//! | `estimator`          | `"exact"` (or `"monte-carlo"`)            |
//! | `n_samples`          | 100000                                    |
//! | `seed`               | [`DEFAULT_SEED`]                          |
//! | `k_range`            | `[1, 60]`                                 |
//! | `k`                  | 30 (`mem` command)                        |
//! | `protocol`           | `"block"` (or `"single"`, needs `k = 1`)  |
//! | `l_axis`             | 25 log-spaced lengths over [0.01, 20] km  |
//! | `f_axis`             | 10 kHz to 1 GHz, two per decade           |
//! | `beta_axis`          | 0.005 to 0.15 in steps of 0.005           |
//! | `frontier_objective` | `{"utility": "NGT"}` (or `"rate"`)        |
//! | `scenarios`          | source-rate, length and switch-size set   |
//! | `compare_beta`       | 0.10                                      |
//! | `emax`               | capacities and budget of the profile      |
//! | `out`                | `qswitch-<command>.<format>`              |
//! | `format`             | `"csv"` (or `"json"`)                     |

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qswitch_core::bench::{
    default_beta_axis, default_f_axis, default_l_axis, default_scenarios, Scenario,
};
use qswitch_core::memswitch::{Estimator, MemProtocol, Objective};
use qswitch_core::utility::UtilityKind;
use qswitch_core::HardwareProfile;

use crate::error::CliError;

/// The bundled baseline scenario.
pub const BASELINE_CONFIG: &str = include_str!("../configs/baseline.json");

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmaxInput {
    pub caps: Vec<u32>,
    pub budget: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: HardwareProfile,
    pub estimator: EstimatorKind,
    pub n_samples: u64,
    pub seed: u64,
    pub k_range: [u32; 2],
    pub k: u32,
    pub protocol: MemProtocol,
    pub l_axis: Vec<f64>,
    pub f_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
    pub frontier_objective: Objective,
    pub scenarios: Vec<Scenario>,
    pub compare_beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emax: Option<EmaxInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: HardwareProfile::baseline(),
            estimator: EstimatorKind::Exact,
            n_samples: 100_000,
            seed: DEFAULT_SEED,
            k_range: [1, 60],
            k: 30,
            protocol: MemProtocol::Block,
            l_axis: default_l_axis(),
            f_axis: default_f_axis(),
            beta_axis: default_beta_axis(),
            frontier_objective: Objective::Utility(UtilityKind::Ngt),
            scenarios: default_scenarios(),
            compare_beta: 0.10,
            emax: None,
            out: None,
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn estimator(&self) -> Estimator {
        match self.estimator {
            EstimatorKind::Exact => Estimator::Exact,
            EstimatorKind::MonteCarlo => Estimator::MonteCarlo {
                n_samples: self.n_samples,
                seed: self.seed,
            },
        }
    }

    pub fn k_range(&self) -> std::ops::RangeInclusive<u32> {
        self.k_range[0]..=self.k_range[1]
    }

    pub fn k_axis(&self) -> Vec<u32> {
        self.k_range().collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.profile.validate()?;
        let bad = |field: &str, reason: &str| {
            Err(CliError::Invalid {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if self.n_samples == 0 {
            return bad("n_samples", "must be at least 1");
        }
        if self.k_range[0] == 0 || self.k_range[0] > self.k_range[1] {
            return bad("k_range", "must be [lo, hi] with 1 <= lo <= hi");
        }
        if self.k == 0 {
            return bad("k", "must be at least 1");
        }
        if self.protocol == MemProtocol::Single && self.k != 1 {
            return bad("k", "the single-attempt protocol requires k = 1");
        }
        for (field, axis) in [("l_axis", &self.l_axis), ("f_axis", &self.f_axis)] {
            if axis.is_empty() || axis.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return bad(field, "must be a nonempty list of positive numbers");
            }
        }
        if self.beta_axis.is_empty() || self.beta_axis.iter().any(|b| !(0.0..=2.0).contains(b)) {
            return bad("beta_axis", "must be a nonempty list within [0, 2]");
        }
        if !(0.0..=2.0).contains(&self.compare_beta) {
            return bad("compare_beta", "must lie in [0, 2]");
        }
        if self.scenarios.is_empty() {
            return bad("scenarios", "must not be empty");
        }
        for s in &self.scenarios {
            s.apply(&self.profile).map_err(|e| CliError::Invalid {
                field: format!("scenarios.{}", s.name),
                reason: e.to_string(),
            })?;
        }
        if let Some(e) = &self.emax {
            if e.caps.len() < 2 {
                return bad("emax.caps", "needs at least two nodes");
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every field except the output
    /// path and format.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.out = None;
        semantic.format = Format::Csv;
        let text = serde_json::to_string(&semantic).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses and validates a configuration document. Whitespace-only input is
/// the all-defaults configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    let config: RunConfig = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => CliError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
            Category::Data => CliError::Schema {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn baseline_config() -> RunConfig {
    parse_config(BASELINE_CONFIG).expect("bundled baseline config is valid")
}
