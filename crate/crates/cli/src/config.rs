//! Run configuration: a flat key-value document (TOML scalar keys only) that
//! round-trips losslessly through serialization.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config write error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Flat run configuration. Exactly one physical source must be given: a named
/// `preset`, or the explicit dimensionless pair `g0` + `omega_k_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Named SI preset ("calcium").
    pub preset: Option<String>,
    /// Coupling window in seconds (preset mode; defaults to the lifetime).
    pub t_coupling_s: Option<f64>,
    /// Explicit dimensionless coupling (with `omega_k_t`).
    pub g0: Option<f64>,
    /// Explicit `ω_k·t` product (with `g0`).
    pub omega_k_t: Option<f64>,

    /// Scattering pulse area η.
    pub eta: f64,
    /// Initial internal amplitudes (real; normalized internally).
    pub alpha: f64,
    pub beta: f64,
    /// Post-selection rotation angle θ.
    pub theta: f64,
    /// Internal phase ωt over the coupling window.
    pub omega_t: Option<f64>,
    /// Directly specified weak value (used only when no ωt path exists).
    pub aw_real: Option<f64>,
    pub aw_imag: Option<f64>,
    /// Solve ωt so that A_w^i hits this target.
    pub aw_target: Option<f64>,

    /// Detector classes for counting runs.
    pub classes: Vec<i32>,
    /// Monte Carlo trials; 0 disables counting.
    pub trials: u32,
    pub n_atoms: u64,
    pub xi_s_sd: f64,
    pub xi_d_sd: f64,
    pub dark_rate: f64,
    pub seed: u64,
    pub shot_noise: bool,

    /// Output directory for CSV/JSON artifacts.
    pub out_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            t_coupling_s: None,
            g0: None,
            omega_k_t: None,
            eta: 10.0,
            alpha: FRAC_1_SQRT_2,
            beta: FRAC_1_SQRT_2,
            theta: 3.0 * std::f64::consts::FRAC_PI_4,
            omega_t: None,
            aw_real: None,
            aw_imag: None,
            aw_target: None,
            classes: vec![0, 5, 10],
            trials: 0,
            n_atoms: 1_000_000,
            xi_s_sd: 0.0,
            xi_d_sd: 0.0,
            dark_rate: 0.0,
            seed: 0,
            shot_noise: false,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Structural checks; cheap enough to run on every entry path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let explicit = self.g0.is_some() || self.omega_k_t.is_some();
        match (&self.preset, explicit) {
            (Some(_), true) => {
                return Err(ConfigError::Invalid(
                    "give either a preset or explicit g0/omega_k_t, not both".into(),
                ))
            }
            (None, true) if self.g0.is_none() || self.omega_k_t.is_none() => {
                return Err(ConfigError::Invalid(
                    "explicit mode needs both g0 and omega_k_t".into(),
                ))
            }
            (None, false) => {
                return Err(ConfigError::Invalid(
                    "no physical source: set a preset or g0 + omega_k_t".into(),
                ))
            }
            _ => {}
        }
        if let Some(name) = &self.preset {
            if crate::preset::PhysicalPreset::by_name(name).is_none() {
                return Err(ConfigError::Invalid(format!(
                    "unknown preset {name:?} (known: {})",
                    crate::preset::PhysicalPreset::known_names().join(", ")
                )));
            }
        }
        if let Some(g0) = self.g0 {
            if !(0.0..1.0).contains(&g0) {
                return Err(ConfigError::Invalid(format!("g0 out of range: {g0}")));
            }
        }
        if self.eta.is_nan() || self.eta < 0.0 {
            return Err(ConfigError::Invalid(format!("eta must be ≥ 0: {}", self.eta)));
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            return Err(ConfigError::Invalid("alpha and beta are both zero".into()));
        }
        if self.aw_target.is_some() && self.omega_t.is_some() {
            return Err(ConfigError::Invalid(
                "aw_target and omega_t are mutually exclusive".into(),
            ));
        }
        if self.xi_s_sd < 0.0 || self.xi_d_sd < 0.0 || self.dark_rate < 0.0 {
            return Err(ConfigError::Invalid("noise scales must be ≥ 0".into()));
        }
        if self.trials > 0 && self.n_atoms == 0 {
            return Err(ConfigError::Invalid("counting runs need n_atoms ≥ 1".into()));
        }
        if self.aw_imag.is_some() != self.aw_real.is_some() {
            return Err(ConfigError::Invalid(
                "aw_real and aw_imag must be given together".into(),
            ));
        }
        Ok(())
    }
}
