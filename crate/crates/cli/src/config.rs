//! Per-command config files (TOML) and manifest replay.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use whrf::hamiltonian::FermiHubbardSpec;
use whrf::vqe::ExperimentConfig;

use crate::error::{CliError, CliResult};
use crate::output::Manifest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianCommand {
    pub hamiltonian: FermiHubbardSpec,
    /// Parameter counts to report `γ = p/2m` for.
    #[serde(default)]
    pub p: Vec<usize>,
    /// Run the MGF and loss-histogram checks as well.
    #[serde(default)]
    pub validate: bool,
    #[serde(default)]
    pub validation: ValidationConfig,
    /// Seeds the validation draws; the disorder seed lives in `[hamiltonian]`.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub p: usize,
    pub r: usize,
    pub draws: usize,
    pub x_max: f64,
    pub x_points: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            p: 20,
            r: 1,
            draws: 2000,
            x_max: 2.0,
            x_points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCommand {
    pub experiment: ExperimentConfig,
    pub instance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictCommand {
    pub gamma: f64,
    /// Degrees of freedom; the CCH density is only produced when given.
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "two_thousand")]
    pub points: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrtCommand {
    #[serde(default)]
    pub k: usize,
    pub p: usize,
    /// Exactly one of `gamma` and `m`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "thousand")]
    pub trials: usize,
    /// Explicit grid; otherwise `points` values evenly spaced on `[e_min, e_max]`.
    #[serde(default)]
    pub energies: Option<Vec<f64>>,
    #[serde(default = "e_min")]
    pub e_min: f64,
    #[serde(default = "e_max")]
    pub e_max: f64,
    #[serde(default = "nineteen")]
    pub points: usize,
    #[serde(default)]
    pub seed: u64,
}

impl CrtCommand {
    pub fn m(&self) -> CliResult<f64> {
        match (self.gamma, self.m) {
            (Some(g), None) if g > 0.0 => Ok(self.p as f64 / (2.0 * g)),
            (None, Some(m)) => Ok(m),
            (Some(_), None) => Err(CliError::user("gamma must be > 0")),
            _ => Err(CliError::user("give exactly one of gamma and m")),
        }
    }

    pub fn grid(&self) -> CliResult<Vec<f64>> {
        if let Some(e) = &self.energies {
            if e.is_empty() {
                return Err(CliError::user("energies must not be empty"));
            }
            return Ok(e.clone());
        }
        if self.points < 2 || !(self.e_min < self.e_max) {
            return Err(CliError::user("need points >= 2 and e_min < e_max"));
        }
        let step = (self.e_max - self.e_min) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.e_min + step * i as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumCommand {
    pub p: usize,
    pub gamma: f64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default)]
    pub x: f64,
    #[serde(default = "twenty")]
    pub draws: usize,
    #[serde(default = "two_thousand")]
    pub nodes: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}
fn twenty() -> usize {
    20
}
fn nineteen() -> usize {
    19
}
fn thousand() -> usize {
    1000
}
fn two_thousand() -> usize {
    2000
}
fn e_min() -> f64 {
    0.05
}
fn e_max() -> f64 {
    0.95
}

/// Reads a TOML config, or the config snapshot of a `manifest.json` written by `command`.
pub fn load<T: DeserializeOwned>(path: &Path, command: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::user(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::user(format!("{} is not a run manifest: {e}", path.display())))?;
        if manifest.command != command {
            return Err(CliError::user(format!(
                "manifest was written by `{}`, not `{command}`",
                manifest.command
            )));
        }
        return serde_json::from_value(manifest.config)
            .map_err(|e| CliError::user(format!("manifest config: {e}")));
    }
    toml::from_str(&text).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
}
