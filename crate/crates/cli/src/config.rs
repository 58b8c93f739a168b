//! Run configuration file (TOML).

use std::fmt;
use std::path::{Path, PathBuf};

use kinmob::dynamics::{InitialConditionSpec, IntegrationSettings};
use kinmob::model::ModelConfig;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Problem with the configuration or command line; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default = "default_initial")]
    pub initial: InitialConditionSpec,
    #[serde(default)]
    pub integration: IntegrationSettings<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levelline: Option<LevelLineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<KappaConfig>,
}

fn default_initial() -> InitialConditionSpec {
    InitialConditionSpec::LowMiddle {
        target_mu: None,
        ratio: None,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Used when `--out-dir` is not given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Write every `trajectory_stride`-th step of a simulation; 0 disables the trajectory file.
    pub trajectory_stride: u64,
}

/// Regime whose Gini index fixes the mean income.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub tau_min: f64,
    pub tau_max: f64,
    pub gamma: f64,
    pub target_gini: f64,
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub mu_tol: f64,
    pub gini_tol: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            tau_min: 0.30,
            tau_max: 0.45,
            gamma: 0.5,
            target_gini: 0.368,
            mu_lo: 100.0,
            mu_hi: 187.5,
            mu_tol: 1e-7,
            gini_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Rate gaps around the 37.5 % midpoint.
    pub delta_tau: Vec<f64>,
    /// Explicit `[tau_min, tau_max]` pairs, instead of `delta_tau`.
    pub rate_pairs: Vec<[f64; 2]>,
    pub gamma: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelLineConfig {
    pub targets: Vec<f64>,
    /// File labels, one per target; defaults to A, B, C, ...
    pub labels: Vec<String>,
    pub delta_tau: Vec<f64>,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub tol: f64,
    pub gamma_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl Default for LevelLineConfig {
    fn default() -> Self {
        Self {
            targets: Vec::new(),
            labels: Vec::new(),
            delta_tau: Vec::new(),
            gamma_lo: 0.01,
            gamma_hi: 0.5,
            tol: 5e-4,
            gamma_tol: 1e-6,
            mu: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KappaConfig {
    pub alpha: Vec<f64>,
    pub kappa: Vec<f64>,
    pub abs_tol: f64,
    pub max_intervals: usize,
    pub boundary_margin: f64,
    /// `m c^2 / k_B T` values to map to κ.
    pub rest_energy_ratio: Vec<f64>,
}

impl Default for KappaConfig {
    fn default() -> Self {
        Self {
            alpha: Vec::new(),
            kappa: Vec::new(),
            abs_tol: 1e-6,
            max_intervals: 4000,
            boundary_margin: 0.02,
            rest_energy_ratio: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_error(format!("invalid config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(config_error(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_toml_str("schema_version = 1").unwrap();
        assert_eq!(cfg.model, ModelConfig::default());
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn round_trip() {
        let text = r#"
schema_version = 1
[model]
n = 15
gamma = 0.3
[initial]
kind = "two-point"
a = 2
b = 14
target_mu = 150.0
[sweep]
delta_tau = [0.1, 0.2]
gamma = [0.2]
[kappa]
alpha = [1.0]
kappa = [0.0, 0.5]
"#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        assert!(RunConfig::from_toml_str("schema_version = 1\n[model]\nbogus = 1").is_err());
        assert!(RunConfig::from_toml_str("schema_version = 1\nextra = 2").is_err());
        assert!(RunConfig::from_toml_str("schema_version = 2").is_err());
        assert!(RunConfig::from_toml_str("[model]\nn = 15").is_err());
    }
}
