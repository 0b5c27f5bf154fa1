//! JSON model configuration.
//!
//! ```json
//! {
//!   "Q": 343, "A": 202, "B": 1.9, "D": 0.35, "Tc": -10, "N": 1,
//!   "transport": "diffusive",
//!   "albedo": { "kind": "budyko", "alpha1": 0.32, "alpha2": 0.62 }
//! }
//! ```
//!
//! See `docs/config.md` for every key and its default.

use std::fs;
use std::path::Path;

use ebm_core::albedo::AlbedoSpec;
use ebm_core::insolation::{s_coefficients, s_quadratic, InsolationSpec, DEFAULT_OBLIQUITY_DEG};
use ebm_core::model::{ModelParams, Transport};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_HEAT_CAPACITY: f64 = 1.0;
pub const DEFAULT_RATE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    Diffusive,
    Relaxation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlbedoKind {
    Budyko,
    Jormungand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SMode {
    /// `s = 1 + s2 p2` with the classic `s2 = -0.477`.
    #[default]
    Quadratic,
    /// Coefficients `s_0..s_2N` projected from the exact annual mean.
    Computed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlbedoConfig {
    pub kind: AlbedoKind,
    pub alpha1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphai: Option<f64>,
    pub alpha2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

/// Model configuration as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(rename = "R", default = "default_heat_capacity")]
    pub r: f64,
    #[serde(rename = "Tc")]
    pub tc: f64,
    #[serde(default = "default_rate")]
    pub eps: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub transport: TransportKind,
    pub albedo: AlbedoConfig,
    #[serde(default)]
    pub s_mode: SMode,
}

fn default_heat_capacity() -> f64 {
    DEFAULT_HEAT_CAPACITY
}

fn default_rate() -> f64 {
    DEFAULT_RATE
}

fn default_beta() -> f64 {
    DEFAULT_OBLIQUITY_DEG
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Check cross-field consistency and build the model parameters.
    pub fn to_params(&self) -> Result<ModelParams, CliError> {
        let transport = match (self.transport, self.c, self.d) {
            (TransportKind::Diffusive, None, Some(d)) => Transport::Diffusive { diffusivity: d },
            (TransportKind::Relaxation, Some(c), None) => Transport::RelaxToMean { coupling: c },
            (TransportKind::Diffusive, _, None) => return Err(config("diffusive transport needs D")),
            (TransportKind::Diffusive, Some(_), _) => {
                return Err(config("C is only meaningful with relaxation transport"))
            }
            (TransportKind::Relaxation, None, _) => return Err(config("relaxation transport needs C")),
            (TransportKind::Relaxation, _, Some(_)) => {
                return Err(config("D is only meaningful with diffusive transport"))
            }
        };

        let al = &self.albedo;
        let albedo = match al.kind {
            AlbedoKind::Budyko => {
                if al.alphai.is_some() || al.rho.is_some() {
                    return Err(config("budyko albedo takes no alphai or rho"));
                }
                AlbedoSpec::Budyko {
                    alpha1: al.alpha1,
                    alpha2: al.alpha2,
                }
            }
            AlbedoKind::Jormungand => {
                let (Some(alpha_i), Some(rho)) = (al.alphai, al.rho) else {
                    return Err(config("jormungand albedo needs both alphai and rho"));
                };
                AlbedoSpec::Jormungand {
                    alpha1: al.alpha1,
                    alpha_i,
                    alpha2: al.alpha2,
                    rho,
                }
            }
        };

        let insolation = match self.s_mode {
            SMode::Quadratic => s_quadratic(),
            SMode::Computed => {
                let spec = InsolationSpec::exact(self.beta).map_err(|e| CliError::Config(e.to_string()))?;
                s_coefficients(&spec, self.n.max(1)).map_err(CliError::from)?
            }
        };
        if !(0.0..90.0).contains(&self.beta) {
            return Err(config("beta must satisfy 0 <= beta < 90"));
        }

        let params = ModelParams {
            solar_mean: self.q,
            olr_offset: self.a,
            olr_slope: self.b,
            heat_capacity: self.r,
            critical_temp: self.tc,
            iceline_rate: self.eps,
            modes: self.n,
            transport,
            albedo,
            insolation,
        };
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }
}

fn config(msg: &str) -> CliError {
    CliError::Config(msg.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUDYKO: &str = r#"{"Q":343,"A":202,"B":1.9,"D":0.35,"Tc":-10,"N":1,
        "transport":"diffusive","albedo":{"kind":"budyko","alpha1":0.32,"alpha2":0.62}}"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ModelConfig::from_json(BUDYKO).unwrap();
        assert_eq!(cfg.r, 1.0);
        assert_eq!(cfg.eps, 1e-2);
        assert_eq!(cfg.beta, 23.5);
        assert_eq!(cfg.s_mode, SMode::Quadratic);
        let p = cfg.to_params().unwrap();
        assert_eq!(p, ModelParams::budyko_modern(0.35));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = BUDYKO.replace("\"N\":1", "\"N\":1,\"Nmax\":3");
        assert!(matches!(ModelConfig::from_json(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn jormungand_without_rho_is_rejected() {
        let text = BUDYKO.replace(
            r#"{"kind":"budyko","alpha1":0.32,"alpha2":0.62}"#,
            r#"{"kind":"jormungand","alpha1":0.32,"alphai":0.36,"alpha2":0.8}"#,
        );
        let cfg = ModelConfig::from_json(&text).unwrap();
        assert!(matches!(cfg.to_params(), Err(CliError::Config(_))));
    }

    #[test]
    fn transport_keys_must_match() {
        let both = BUDYKO.replace("\"D\":0.35", "\"D\":0.35,\"C\":3");
        assert!(ModelConfig::from_json(&both).unwrap().to_params().is_err());
        let relax = BUDYKO.replace("\"diffusive\"", "\"relaxation\"");
        assert!(ModelConfig::from_json(&relax).unwrap().to_params().is_err());
    }

    #[test]
    fn computed_insolation_has_n_plus_one_modes() {
        let text = BUDYKO.replace("\"N\":1", "\"N\":3,\"s_mode\":\"computed\"");
        let p = ModelConfig::from_json(&text).unwrap().to_params().unwrap();
        assert_eq!(p.insolation.coeffs().len(), 4);
        assert!((p.insolation.get(1) + 0.4759).abs() < 1e-3);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ModelConfig::from_json(BUDYKO).unwrap();
        let again = ModelConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
