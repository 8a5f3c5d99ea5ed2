//! Photon-shot-noise dephasing and coherence-time algebra.
//!
//! In the dispersive regime with few thermal photons (n̄ ≪ 1) the qubit
//! dephases at
//!
//! ```text
//! Γ_φ = n̄ κ χ² / (κ² + χ²)        (κ, χ angular)
//! ```
//!
//! where κ is the *total* linewidth of the readout mode (internal plus all
//! couplings): the photon-number correlation time is set by total decay.
//! Rates in this crate are stored as ordinary frequencies; the conversion
//! κ → 2πκ, χ → 2πχ happens here and only here. Γ_φ comes out in s⁻¹.
//!
//! Echo coherence obeys 1/T₂ₑ = 1/(2T₁) + Γ_φ, so
//! T₂ₑ/2T₁ = T_φ/(T_φ + 2T₁).

use serde::{Deserialize, Serialize};

use crate::thermal::effective_temperature;
use crate::units::angular;
use crate::{Error, Result};

/// Above this photon number the linear dephasing formula is outside its
/// regime of validity; a warning is logged but the value is still returned.
pub const PHOTON_NUMBER_VALIDITY_LIMIT: f64 = 0.1;

/// Number of standard deviations by which Γ_φ may be negative before the
/// data are called inconsistent.
pub const INCONSISTENCY_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpec {
    /// Hz.
    pub f_ge: f64,
    /// f_ge − f_ef, Hz.
    pub anharmonicity: f64,
    /// Dispersive shift χ/2π, Hz.
    pub chi: f64,
    /// Baseline relaxation rate Γ₁ = 1/T₁, s⁻¹.
    pub gamma1: f64,
}

impl TransmonSpec {
    pub fn new(f_ge: f64, anharmonicity: f64, chi: f64, gamma1: f64) -> Result<Self> {
        let t = Self {
            f_ge,
            anharmonicity,
            chi,
            gamma1,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_ge > 0.0 && self.f_ge.is_finite()) {
            return Err(Error::invalid(format!("f_ge must be > 0, got {}", self.f_ge)));
        }
        if !self.anharmonicity.is_finite() || !self.chi.is_finite() {
            return Err(Error::invalid("anharmonicity and chi must be finite"));
        }
        if self.chi == 0.0 {
            return Err(Error::invalid("chi must be nonzero for dispersive operations"));
        }
        if !(self.gamma1 > 0.0 && self.gamma1.is_finite()) {
            return Err(Error::invalid(format!("gamma1 must be > 0, got {}", self.gamma1)));
        }
        Ok(())
    }

    pub fn t1(&self) -> f64 {
        1.0 / self.gamma1
    }
}

/// A value with a symmetric one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }
}

/// A value with an asymmetric interval `low ≤ value ≤ high`; bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub value: f64,
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            low: value,
            high: value,
        }
    }

    pub fn minus(&self) -> f64 {
        self.value - self.low
    }

    pub fn plus(&self) -> f64 {
        self.high - self.value
    }
}

/// How the measured T₂ₑ relates to the relaxation limit 2T₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceStatus {
    /// Γ_φ > 0: finite pure dephasing time.
    Dephased,
    /// Γ_φ ≤ 0 but within uncertainty: T_φ reported as infinite.
    RelaxationLimited,
    /// T₂ₑ exceeds 2T₁ by more than the propagated uncertainty allows.
    Inconsistent,
}

/// Pure dephasing extracted from a T₁/T₂ₑ pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureDephasing {
    /// s⁻¹; may be negative, never clipped.
    pub gamma_phi: f64,
    /// Seconds; `f64::INFINITY` when relaxation-limited.
    pub t_phi: f64,
    /// T₂ₑ/2T₁.
    pub ratio: f64,
    pub status: CoherenceStatus,
}

fn classify(gamma_phi: f64, sigma: f64, scale: f64) -> CoherenceStatus {
    // Γ_φ within rounding of zero counts as zero.
    let gamma = if gamma_phi.abs() <= 1e-12 * scale { 0.0 } else { gamma_phi };
    if gamma > 0.0 {
        CoherenceStatus::Dephased
    } else if gamma + INCONSISTENCY_SIGMAS * sigma >= 0.0 {
        CoherenceStatus::RelaxationLimited
    } else {
        CoherenceStatus::Inconsistent
    }
}

/// Γ_φ = 1/T₂ₑ − 1/(2T₁) and T_φ = 1/Γ_φ.
pub fn pure_dephasing_from_times(t1: f64, t2e: f64) -> Result<PureDephasing> {
    if !(t1 > 0.0 && t2e > 0.0 && t1.is_finite() && t2e.is_finite()) {
        return Err(Error::domain(format!("T1 and T2e must be > 0, got {t1}, {t2e}")));
    }
    let gamma_phi = 1.0 / t2e - 1.0 / (2.0 * t1);
    let status = classify(gamma_phi, 0.0, 1.0 / t2e);
    let t_phi = match status {
        CoherenceStatus::Dephased => 1.0 / gamma_phi,
        _ => f64::INFINITY,
    };
    if status == CoherenceStatus::Inconsistent {
        log::warn!("T2e = {t2e:e} s exceeds 2T1 = {:e} s", 2.0 * t1);
    }
    Ok(PureDephasing {
        gamma_phi,
        t_phi,
        ratio: t2e / (2.0 * t1),
        status,
    })
}

/// T_φ implied by a T₂ₑ/2T₁ ratio: 2T₁·r/(1 − r).
pub fn tphi_from_ratio(t1: f64, ratio: f64) -> Result<f64> {
    if !(t1 > 0.0 && ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::domain(format!("need T1 > 0 and 0 < ratio <= 1, got {t1}, {ratio}")));
    }
    if ratio == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * t1 * ratio / (1.0 - ratio))
}

/// κχ²/(κ² + χ²) in angular units: Γ_φ per thermal photon, s⁻¹.
pub fn dephasing_per_photon(kappa: f64, chi: f64) -> Result<f64> {
    if !(kappa >= 0.0 && kappa.is_finite() && chi.is_finite()) {
        return Err(Error::domain(format!("need kappa >= 0 and finite chi, got {kappa}, {chi}")));
    }
    if kappa == 0.0 && chi == 0.0 {
        return Err(Error::domain("kappa and chi cannot both be zero"));
    }
    let k = angular(kappa);
    let c = angular(chi);
    Ok(k * c * c / (k * k + c * c))
}

/// Thermal-photon dephasing rate Γ_φ (s⁻¹) for mean photon number
/// `n_bar`, total linewidth `kappa` and dispersive shift `chi` (both Hz).
pub fn thermal_dephasing_rate(n_bar: f64, kappa: f64, chi: f64) -> Result<f64> {
    if !(n_bar >= 0.0 && n_bar.is_finite()) {
        return Err(Error::domain(format!("photon number must be >= 0, got {n_bar}")));
    }
    if n_bar > PHOTON_NUMBER_VALIDITY_LIMIT {
        log::warn!("n = {n_bar} is beyond the n << 1 regime of the dephasing formula");
    }
    Ok(n_bar * dephasing_per_photon(kappa, chi)?)
}

/// Photon number that would produce `gamma_phi`; inverse of [`thermal_dephasing_rate`].
pub fn photon_number_from_rate(gamma_phi: f64, kappa: f64, chi: f64) -> Result<f64> {
    let per_photon = dephasing_per_photon(kappa, chi)?;
    if per_photon == 0.0 {
        return Err(Error::domain("zero dispersive coupling: photon number unobservable"));
    }
    Ok(gamma_phi / per_photon)
}

/// Upper bound on the thermal photon number (and its effective
/// temperature) obtained by attributing *all* pure dephasing to photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonBound {
    pub n_bar: f64,
    /// Kelvin; 0 when the bound is below sensitivity.
    pub t_eff: f64,
    pub below_sensitivity: bool,
    pub dephasing: PureDephasing,
}

pub fn photon_bound_from_coherence(t1: f64, t2e: f64, f: f64, kappa: f64, chi: f64) -> Result<PhotonBound> {
    let dephasing = pure_dephasing_from_times(t1, t2e)?;
    photon_bound_from_dephasing(dephasing, f, kappa, chi)
}

pub(crate) fn photon_bound_from_dephasing(
    dephasing: PureDephasing,
    f: f64,
    kappa: f64,
    chi: f64,
) -> Result<PhotonBound> {
    if dephasing.status != CoherenceStatus::Dephased {
        return Ok(PhotonBound {
            n_bar: 0.0,
            t_eff: 0.0,
            below_sensitivity: true,
            dephasing,
        });
    }
    let n_bar = photon_number_from_rate(dephasing.gamma_phi, kappa, chi)?;
    Ok(PhotonBound {
        n_bar,
        t_eff: effective_temperature(f, n_bar)?,
        below_sensitivity: false,
        dephasing,
    })
}

/// One measurement point: T₁, T₂ₑ and optionally T₂ᵣ, with derived T_φ and ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSet {
    pub t1: Measured,
    pub t2e: Measured,
    pub t2r: Option<Measured>,
    /// Γ_φ with first-order uncertainty, s⁻¹.
    pub gamma_phi: Measured,
    /// Seconds; `value` is infinite when relaxation-limited.
    pub t_phi: Interval,
    /// T₂ₑ/2T₁; the upper bound is capped at the physical limit 1.
    pub ratio: Interval,
    pub status: CoherenceStatus,
}

impl CoherenceSet {
    pub fn new(t1: Measured, t2e: Measured, t2r: Option<Measured>) -> Result<Self> {
        if !(t1.value > 0.0 && t2e.value > 0.0) {
            return Err(Error::invalid(format!(
                "T1 and T2e must be > 0, got {}, {}",
                t1.value, t2e.value
            )));
        }
        if !(t1.sigma >= 0.0 && t2e.sigma >= 0.0) {
            return Err(Error::invalid("uncertainties must be >= 0"));
        }
        let pd = pure_dephasing_from_times(t1.value, t2e.value)?;
        // delta method: ∂Γ/∂T₂ = −1/T₂², ∂Γ/∂T₁ = 1/(2T₁²)
        let sigma_gamma = (t2e.sigma / (t2e.value * t2e.value))
            .hypot(t1.sigma / (2.0 * t1.value * t1.value));
        let status = classify(pd.gamma_phi, sigma_gamma, 1.0 / t2e.value);
        if status == CoherenceStatus::Inconsistent {
            log::warn!(
                "T2e/2T1 = {:.3} exceeds 1 beyond {INCONSISTENCY_SIGMAS} sigma",
                pd.ratio
            );
        }
        let inv = |g: f64| if g > 0.0 { 1.0 / g } else { f64::INFINITY };
        let t_phi = Interval {
            value: if status == CoherenceStatus::Dephased { pd.t_phi } else { f64::INFINITY },
            low: inv(pd.gamma_phi + sigma_gamma),
            high: inv(pd.gamma_phi - sigma_gamma),
        };
        let r = pd.ratio;
        let sigma_r = r * (t2e.sigma / t2e.value).hypot(t1.sigma / t1.value);
        let ratio = Interval {
            value: r,
            low: r - sigma_r,
            high: (r + sigma_r).min(r.max(1.0)),
        };
        Ok(Self {
            t1,
            t2e,
            t2r,
            gamma_phi: Measured::new(pd.gamma_phi, sigma_gamma),
            t_phi,
            ratio,
            status,
        })
    }

    pub fn exact(t1: f64, t2e: f64) -> Result<Self> {
        Self::new(Measured::exact(t1), Measured::exact(t2e), None)
    }
}

/// Forward model: 1/T₂ₑ = 1/(2T₁) + Γ_φ(n̄, κ, χ) + Γ_extra.
///
/// `gamma_extra` lumps every non-photon dephasing channel (s⁻¹).
pub fn predict_coherence(t1: f64, n_bar: f64, kappa: f64, chi: f64, gamma_extra: f64) -> Result<CoherenceSet> {
    if !(t1 > 0.0 && t1.is_finite()) {
        return Err(Error::domain(format!("T1 must be > 0, got {t1}")));
    }
    if !(gamma_extra >= 0.0 && gamma_extra.is_finite()) {
        return Err(Error::domain(format!("extra dephasing must be >= 0, got {gamma_extra}")));
    }
    let gamma2 = 0.5 / t1 + thermal_dephasing_rate(n_bar, kappa, chi)? + gamma_extra;
    // 1/(0.5/T₁) can round one ulp above 2T₁
    CoherenceSet::exact(t1, (1.0 / gamma2).min(2.0 * t1))
}
