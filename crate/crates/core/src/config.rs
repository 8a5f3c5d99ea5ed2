//! JSON device configuration.
//!
//! Files use unit-suffixed keys (`f_ghz`, `kappa_i_mhz`, `t1_us`, ...) and
//! reject unknown keys. Errors carry the JSON path of the offending value,
//! e.g. `environment.ports[1].rate_mhz`.
//!
//! ```json
//! {
//!   "label": "brass",
//!   "transmon": {"f_ge_ghz": 4.75, "alpha_ghz": 0.25, "chi_mhz": 1.2, "t1_us": 102},
//!   "readout": {"f_ghz": 7.573, "kappa_i_mhz": 11.4, "kappa_c1_mhz": 1.9},
//!   "environment": {
//!     "ports": [
//!       {"label": "internal", "rate_mhz": 11.4, "occupation": 0.0},
//!       {"label": "external", "rate_mhz": 1.9, "chain_fed": true}
//!     ],
//!     "chain": [{"attenuation_db": 70, "temperature_k": 0.015}],
//!     "source_temperature_k": 300
//!   },
//!   "t1_jitter": 0.08
//! }
//! ```
//!
//! A port with `"chain_fed": true` takes its occupation from the attenuation
//! chain evaluated at the readout frequency.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dephasing::TransmonSpec;
use crate::experiment::{DeviceConfig, MAX_T1_JITTER};
use crate::modes::ResonatorSpec;
use crate::thermal::{attenuation_chain_occupation, BathPort, ChainElement, ThermalEnvironment};
use crate::units::{GHZ, MHZ, US};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonFile {
    pub f_ge_ghz: f64,
    pub alpha_ghz: f64,
    pub chi_mhz: f64,
    pub t1_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorFile {
    pub f_ghz: f64,
    pub kappa_i_mhz: f64,
    pub kappa_c1_mhz: f64,
    #[serde(default)]
    pub kappa_c2_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortFile {
    pub label: String,
    pub rate_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupation: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub chain_fed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainElementFile {
    pub attenuation_db: f64,
    pub temperature_k: f64,
}

fn default_source_temperature() -> f64 {
    300.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentFile {
    pub ports: Vec<PortFile>,
    #[serde(default)]
    pub chain: Vec<ChainElementFile>,
    #[serde(default = "default_source_temperature")]
    pub source_temperature_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub transmon: TransmonFile,
    pub readout: ResonatorFile,
    pub environment: EnvironmentFile,
    #[serde(default)]
    pub gamma_extra_per_s: f64,
    #[serde(default)]
    pub gamma_slow_per_s: f64,
    #[serde(default)]
    pub t1_jitter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u32>,
}

fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::Config {
            path: path.to_string(),
            message: other.to_string(),
        },
    })
}

/// Deserializes JSON, reporting the path of the first offending value.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config {
            path: if path.is_empty() { ".".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })
}

impl TransmonFile {
    pub fn to_spec(&self) -> Result<TransmonSpec> {
        if !(self.t1_us > 0.0) {
            return Err(Error::Config {
                path: "transmon.t1_us".into(),
                message: format!("T1 must be > 0, got {}", self.t1_us),
            });
        }
        at(
            "transmon",
            TransmonSpec::new(self.f_ge_ghz * GHZ, self.alpha_ghz * GHZ, self.chi_mhz * MHZ, 1.0 / (self.t1_us * US)),
        )
    }
}

impl ResonatorFile {
    pub fn to_spec(&self) -> Result<ResonatorSpec> {
        at(
            "readout",
            ResonatorSpec::new(
                self.f_ghz * GHZ,
                self.kappa_i_mhz * MHZ,
                self.kappa_c1_mhz * MHZ,
                self.kappa_c2_mhz * MHZ,
            ),
        )
    }
}

impl EnvironmentFile {
    /// Builds the environment; chain-fed ports are evaluated at `f` (Hz).
    pub fn to_environment(&self, f: f64) -> Result<ThermalEnvironment> {
        if self.ports.is_empty() {
            return Err(Error::Config {
                path: "environment.ports".into(),
                message: "at least one port is required".into(),
            });
        }
        let chain = self
            .chain
            .iter()
            .enumerate()
            .map(|(i, c)| {
                at(
                    &format!("environment.chain[{i}]"),
                    ChainElement::new(c.attenuation_db, c.temperature_k),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut env = ThermalEnvironment {
            ports: Vec::new(),
            chain,
            source_temperature: self.source_temperature_k,
        };
        at(
            "environment.source_temperature_k",
            if self.source_temperature_k > 0.0 && self.source_temperature_k.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("must be > 0, got {}", self.source_temperature_k)))
            },
        )?;
        let chain_n = if self.ports.iter().any(|p| p.chain_fed) {
            Some(at("environment.chain", attenuation_chain_occupation(&env, f))?)
        } else {
            None
        };
        for (i, p) in self.ports.iter().enumerate() {
            let path = format!("environment.ports[{i}]");
            let occupation = match (p.occupation, p.chain_fed) {
                (Some(_), true) => {
                    return Err(Error::Config {
                        path,
                        message: "give either `occupation` or `chain_fed`, not both".into(),
                    })
                }
                (None, false) => {
                    return Err(Error::Config {
                        path,
                        message: "missing `occupation` (or set `chain_fed`)".into(),
                    })
                }
                (Some(n), false) => n,
                (None, true) => chain_n.unwrap_or_default(),
            };
            env.ports.push(at(&path, BathPort::new(p.label.clone(), p.rate_mhz * MHZ, occupation))?);
        }
        Ok(env)
    }
}

impl DeviceConfigFile {
    pub fn to_device(&self) -> Result<DeviceConfig> {
        let readout = self.readout.to_spec()?;
        for (path, v) in [("gamma_extra_per_s", self.gamma_extra_per_s), ("gamma_slow_per_s", self.gamma_slow_per_s)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config {
                    path: path.into(),
                    message: format!("must be >= 0, got {v}"),
                });
            }
        }
        if !(0.0..=MAX_T1_JITTER).contains(&self.t1_jitter) {
            return Err(Error::Config {
                path: "t1_jitter".into(),
                message: format!("must lie in [0, {MAX_T1_JITTER}], got {}", self.t1_jitter),
            });
        }
        if self.shots == Some(0) {
            return Err(Error::Config {
                path: "shots".into(),
                message: "must be >= 1".into(),
            });
        }
        let cfg = DeviceConfig {
            transmon: self.transmon.to_spec()?,
            readout,
            environment: self.environment.to_environment(readout.f)?,
            extra_dephasing: self.gamma_extra_per_s,
            ramsey_excess: self.gamma_slow_per_s,
            t1_jitter: self.t1_jitter,
            shots: self.shots,
        };
        at(".", cfg.validate())?;
        Ok(cfg)
    }

    /// Inverse of [`Self::to_device`]; every port gets an explicit occupation.
    pub fn from_device(cfg: &DeviceConfig, label: Option<String>) -> Self {
        Self {
            label,
            transmon: TransmonFile {
                f_ge_ghz: cfg.transmon.f_ge / GHZ,
                alpha_ghz: cfg.transmon.anharmonicity / GHZ,
                chi_mhz: cfg.transmon.chi / MHZ,
                t1_us: cfg.transmon.t1() / US,
            },
            readout: ResonatorFile {
                f_ghz: cfg.readout.f / GHZ,
                kappa_i_mhz: cfg.readout.kappa_i / MHZ,
                kappa_c1_mhz: cfg.readout.kappa_c1 / MHZ,
                kappa_c2_mhz: cfg.readout.kappa_c2 / MHZ,
            },
            environment: EnvironmentFile {
                ports: cfg
                    .environment
                    .ports
                    .iter()
                    .map(|p| PortFile {
                        label: p.label.clone(),
                        rate_mhz: p.rate / MHZ,
                        occupation: Some(p.occupation),
                        chain_fed: false,
                    })
                    .collect(),
                chain: cfg
                    .environment
                    .chain
                    .iter()
                    .map(|c| ChainElementFile {
                        attenuation_db: c.attenuation_db,
                        temperature_k: c.temperature,
                    })
                    .collect(),
                source_temperature_k: cfg.environment.source_temperature,
            },
            gamma_extra_per_s: cfg.extra_dephasing,
            gamma_slow_per_s: cfg.ramsey_excess,
            t1_jitter: cfg.t1_jitter,
            shots: cfg.shots,
        }
    }
}

/// Parses and validates a device configuration file.
pub fn parse_device_config(text: &str) -> Result<(DeviceConfigFile, DeviceConfig)> {
    let file: DeviceConfigFile = from_json_str(text)?;
    let cfg = file.to_device()?;
    Ok((file, cfg))
}
