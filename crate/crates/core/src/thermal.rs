//! Bose–Einstein thermometry, multi-bath photon occupation and cascaded
//! attenuator noise.
//!
//! A resonator mode coupled to several baths (its own internal loss, each
//! coupling port) settles at the rate-weighted mean of the bath
//! occupations. The attenuation-chain model is an extension on top of that
//! picture: it estimates how much photon noise reaches a port from a warm
//! source through a ladder of cold attenuators, so that a port occupation
//! can be derived rather than asserted. Nothing in the reference
//! measurements constrains how the external-bath occupation is split among
//! wiring components; treat chain output as an estimate.

use serde::{Deserialize, Serialize};

use crate::units::{loss_db_to_ratio, BOLTZMANN, PLANCK};
use crate::{Error, Result};

/// Above this value of hf/k_BT the occupation underflows; it is reported as 0.
const MAX_EXPONENT: f64 = 700.0;

/// One bath seen by a mode: a dissipation or coupling channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathPort {
    pub label: String,
    /// Rate κ/2π in Hz.
    pub rate: f64,
    /// Mean photon number of the bath at the mode frequency.
    pub occupation: f64,
}

impl BathPort {
    pub fn new(label: impl Into<String>, rate: f64, occupation: f64) -> Result<Self> {
        let port = Self {
            label: label.into(),
            rate,
            occupation,
        };
        port.validate()?;
        Ok(port)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::invalid(format!(
                "port `{}`: rate must be > 0, got {}",
                self.label, self.rate
            )));
        }
        if !(self.occupation >= 0.0 && self.occupation.is_finite()) {
            return Err(Error::invalid(format!(
                "port `{}`: occupation must be >= 0, got {}",
                self.label, self.occupation
            )));
        }
        Ok(())
    }
}

/// A matched attenuator held at a fixed temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainElement {
    pub attenuation_db: f64,
    /// Kelvin.
    pub temperature: f64,
}

impl ChainElement {
    pub fn new(attenuation_db: f64, temperature: f64) -> Result<Self> {
        let el = Self {
            attenuation_db,
            temperature,
        };
        el.validate()?;
        Ok(el)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.attenuation_db >= 0.0 && self.attenuation_db.is_finite()) {
            return Err(Error::invalid(format!(
                "chain attenuation must be >= 0 dB, got {}",
                self.attenuation_db
            )));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid(format!(
                "chain element temperature must be > 0 K, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// The baths seen by one mode, plus the attenuator ladder feeding its
/// external port. `chain` is ordered from the source towards the device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalEnvironment {
    pub ports: Vec<BathPort>,
    pub chain: Vec<ChainElement>,
    /// Kelvin.
    pub source_temperature: f64,
}

impl ThermalEnvironment {
    pub fn new(
        ports: Vec<BathPort>,
        chain: Vec<ChainElement>,
        source_temperature: f64,
    ) -> Result<Self> {
        let env = Self {
            ports,
            chain,
            source_temperature,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ports.is_empty() {
            return Err(Error::invalid("thermal environment needs at least one port"));
        }
        for p in &self.ports {
            p.validate()?;
        }
        for el in &self.chain {
            el.validate()?;
        }
        if !(self.source_temperature > 0.0 && self.source_temperature.is_finite()) {
            return Err(Error::invalid(format!(
                "source temperature must be > 0 K, got {}",
                self.source_temperature
            )));
        }
        Ok(())
    }

    pub fn total_rate(&self) -> f64 {
        self.ports.iter().map(|p| p.rate).sum()
    }

    /// Steady-state occupation of the mode with the configured port occupations.
    pub fn mode_occupation(&self) -> Result<f64> {
        mixed_bath_occupation(&self.ports)
    }

    pub fn port(&self, label: &str) -> Option<&BathPort> {
        self.ports.iter().find(|p| p.label == label)
    }

    /// Copy of the environment with port `label` set to `occupation`.
    pub fn with_port_occupation(&self, label: &str, occupation: f64) -> Result<Self> {
        let mut env = self.clone();
        let port = env
            .ports
            .iter_mut()
            .find(|p| p.label == label)
            .ok_or_else(|| Error::invalid(format!("no port labeled `{label}`")))?;
        port.occupation = occupation;
        port.validate()?;
        Ok(env)
    }

    /// Copy of the environment where port `label` takes its occupation from
    /// the attenuation chain evaluated at `f`.
    pub fn with_chain_fed_port(&self, label: &str, f: f64) -> Result<Self> {
        let n = attenuation_chain_occupation(self, f)?;
        self.with_port_occupation(label, n)
    }
}

fn reduced_energy(f: f64, temperature: f64) -> f64 {
    PLANCK * f / (BOLTZMANN * temperature)
}

/// Mean photon number 1/(exp(hf/k_BT) − 1) of a mode at `f` (Hz) in
/// equilibrium at `temperature` (K).
///
/// Returns exactly 0 once hf/k_BT exceeds 700, where the exponential would
/// otherwise overflow; sweeps down to microkelvin never abort.
pub fn bose_einstein_occupation(f: f64, temperature: f64) -> Result<f64> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::domain(format!("frequency must be > 0, got {f}")));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::domain(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    let x = reduced_energy(f, temperature);
    if x > MAX_EXPONENT {
        return Ok(0.0);
    }
    Ok(1.0 / x.exp_m1())
}

/// Temperature whose Bose–Einstein occupation at `f` equals `occupation`;
/// the exact inverse of [`bose_einstein_occupation`].
pub fn effective_temperature(f: f64, occupation: f64) -> Result<f64> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::domain(format!("frequency must be > 0, got {f}")));
    }
    if !(occupation > 0.0 && occupation.is_finite()) {
        return Err(Error::domain(format!(
            "occupation must be > 0, got {occupation}"
        )));
    }
    Ok(PLANCK * f / (BOLTZMANN * (1.0 / occupation).ln_1p()))
}

/// Rate-weighted mean Σκⱼn̄ⱼ / Σκⱼ of the bath occupations.
pub fn mixed_bath_occupation(ports: &[BathPort]) -> Result<f64> {
    if ports.is_empty() {
        return Err(Error::invalid("bath mixing needs at least one port"));
    }
    for p in ports {
        p.validate()?;
    }
    let (weighted, total) = ports.iter().fold((0.0, 0.0), |(w, t), p| {
        (w + p.rate * p.occupation, t + p.rate)
    });
    Ok(weighted / total)
}

/// Occupation arriving at the device end of the attenuation chain.
///
/// Starts from the source occupation and applies, element by element,
/// `n ← n·a + (1 − a)·n_BE(f, T_el)` with `a = 10^(−A/10)`.
pub fn attenuation_chain_occupation(env: &ThermalEnvironment, f: f64) -> Result<f64> {
    for el in &env.chain {
        el.validate()?;
    }
    let mut n = bose_einstein_occupation(f, env.source_temperature)?;
    for el in &env.chain {
        let a = loss_db_to_ratio(el.attenuation_db);
        n = n * a + (1.0 - a) * bose_einstein_occupation(f, el.temperature)?;
    }
    Ok(n)
}
