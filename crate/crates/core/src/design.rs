//! Order-of-magnitude estimators for dissipative cavity attenuators.
//!
//! The estimates here are meant to be right within a factor of a few, not
//! to replace a field solver. The internal Q follows the parallel-plate
//! picture Q ≈ G·gap/δ; the mode frequency follows a half-wave along the
//! long dimension. Both expose explicit correction factors whose defaults
//! (1.0) are uncalibrated. At cryogenic temperatures copper enters the
//! anomalous skin regime, so a linewidth-derived conductivity ratio will
//! fall short of the DC residual-resistivity ratio; that effect is not
//! modeled.

use serde::{Deserialize, Serialize};

use crate::modes::{two_port_transmission, ResonatorSpec};
use crate::units::{MHZ, MU_0, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// Handbook room-temperature resistivity of copper, Ω·m.
pub const COPPER_RESISTIVITY_RT: f64 = 1.7e-8;
/// Handbook room-temperature resistivity of brass, Ω·m.
pub const BRASS_RESISTIVITY_RT: f64 = 6.9e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    /// Ω·m at `temperature`.
    pub resistivity: f64,
    /// Kelvin.
    pub temperature: f64,
    /// κ_i at room temperature over κ_i cold, when measured.
    pub cryo_linewidth_ratio: Option<f64>,
}

impl MaterialSpec {
    pub fn new(name: impl Into<String>, resistivity: f64, temperature: f64) -> Result<Self> {
        if !(resistivity > 0.0 && resistivity.is_finite()) {
            return Err(Error::invalid(format!("resistivity must be > 0, got {resistivity}")));
        }
        Ok(Self {
            name: name.into(),
            resistivity,
            temperature,
            cryo_linewidth_ratio: None,
        })
    }

    pub fn copper() -> Self {
        Self::new("copper", COPPER_RESISTIVITY_RT, 296.0).expect("valid constant")
    }

    pub fn brass() -> Self {
        Self::new("brass", BRASS_RESISTIVITY_RT, 296.0).expect("valid constant")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuatorGeometry {
    /// Smallest dimension, m.
    pub gap: f64,
    /// Long dimension setting the mode frequency, m.
    pub length: f64,
    pub geometry_factor: f64,
    pub effective_length_correction: f64,
}

impl AttenuatorGeometry {
    pub fn new(gap: f64, length: f64) -> Result<Self> {
        let g = Self {
            gap,
            length,
            geometry_factor: 1.0,
            effective_length_correction: 1.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap > 0.0 && self.length > 0.0) {
            return Err(Error::invalid(format!(
                "gap and length must be > 0, got {}, {}",
                self.gap, self.length
            )));
        }
        if !(self.geometry_factor > 0.0 && self.effective_length_correction > 0.0) {
            return Err(Error::invalid("geometry factor and length correction must be > 0"));
        }
        Ok(())
    }

    pub fn with_geometry_factor(mut self, g: f64) -> Result<Self> {
        self.geometry_factor = g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_length_correction(mut self, c: f64) -> Result<Self> {
        self.effective_length_correction = c;
        self.validate()?;
        Ok(self)
    }
}

/// Classical skin depth √(ρ/(π f μ₀)), m.
pub fn skin_depth(resistivity: f64, f: f64) -> Result<f64> {
    if !(resistivity > 0.0 && f > 0.0 && resistivity.is_finite() && f.is_finite()) {
        return Err(Error::domain(format!(
            "resistivity and frequency must be > 0, got {resistivity}, {f}"
        )));
    }
    Ok((resistivity / (std::f64::consts::PI * f * MU_0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    pub q_internal: f64,
    /// κ_i = f/Q_i, Hz.
    pub kappa_i: f64,
}

/// Q_i ≈ G·gap/δ and the corresponding κ_i at frequency `f`.
pub fn q_estimate(geom: &AttenuatorGeometry, skin_depth: f64, f: f64) -> Result<QEstimate> {
    geom.validate()?;
    if !(skin_depth > 0.0 && f > 0.0) {
        return Err(Error::domain("skin depth and frequency must be > 0"));
    }
    if skin_depth >= geom.gap {
        return Err(Error::OutOfModel(format!(
            "skin depth {skin_depth:e} m is not smaller than the gap {:e} m",
            geom.gap
        )));
    }
    let q_internal = geom.geometry_factor * geom.gap / skin_depth;
    Ok(QEstimate {
        q_internal,
        kappa_i: f / q_internal,
    })
}

/// σ_cold/σ_RT implied by a linewidth change, (κ_RT/κ_cold)², since
/// κ ∝ δ ∝ σ^(−1/2).
pub fn conductivity_ratio_from_linewidths(kappa_rt: f64, kappa_cold: f64) -> Result<f64> {
    if !(kappa_rt > 0.0 && kappa_cold > 0.0) {
        return Err(Error::domain(format!(
            "linewidths must be > 0, got {kappa_rt}, {kappa_cold}"
        )));
    }
    let r = kappa_rt / kappa_cold;
    Ok(r * r)
}

/// Half-wave resonance c/(2·L·correction), Hz.
pub fn halfwave_frequency(geom: &AttenuatorGeometry) -> Result<f64> {
    geom.validate()?;
    Ok(SPEED_OF_LIGHT / (2.0 * geom.length * geom.effective_length_correction))
}

/// Cold frequency after a fractional length contraction `epsilon`.
pub fn contracted_frequency(f_rt: f64, epsilon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::domain(format!("contraction must lie in [0, 1), got {epsilon}")));
    }
    if !(f_rt > 0.0) {
        return Err(Error::domain(format!("frequency must be > 0, got {f_rt}")));
    }
    Ok(f_rt / (1.0 - epsilon))
}

/// Fractional contraction that maps `f_rt` onto `f_cold`.
pub fn contraction_from_frequencies(f_rt: f64, f_cold: f64) -> Result<f64> {
    if !(f_rt > 0.0 && f_cold >= f_rt) {
        return Err(Error::domain(format!("need 0 < f_rt <= f_cold, got {f_rt}, {f_cold}")));
    }
    Ok(1.0 - f_rt / f_cold)
}

/// Which rate the bandwidth window is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthBasis {
    /// κ_i alone: the dissipative part that sets the attenuation band.
    #[default]
    InternalRate,
    /// κ_i + κ_c1 + κ_c2.
    TotalLinewidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Requirements {
    /// Hz.
    pub centering_tolerance: f64,
    pub min_attenuation_db: f64,
    pub max_attenuation_db: f64,
    /// Hz.
    pub min_bandwidth: f64,
    /// Hz.
    pub max_bandwidth: f64,
    pub bandwidth_basis: BandwidthBasis,
}

impl Default for Requirements {
    fn default() -> Self {
        Self {
            centering_tolerance: 25.0 * MHZ,
            min_attenuation_db: 10.0,
            max_attenuation_db: 20.0,
            min_bandwidth: 10.0 * MHZ,
            max_bandwidth: 50.0 * MHZ,
            bandwidth_basis: BandwidthBasis::InternalRate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequirementReport {
    pub target_f: f64,
    pub f: f64,
    pub detuning: f64,
    pub insertion_loss_db: f64,
    /// κ_i + κ_c1 + κ_c2, Hz.
    pub linewidth: f64,
    /// The rate compared against the bandwidth window, Hz.
    pub bandwidth_checked: f64,
    pub centered: bool,
    pub attenuation_ok: bool,
    pub bandwidth_ok: bool,
}

impl RequirementReport {
    pub fn all_pass(&self) -> bool {
        self.centered && self.attenuation_ok && self.bandwidth_ok
    }
}

/// Checks a two-port attenuator against centering, attenuation and
/// bandwidth windows.
pub fn check_requirements(spec: &ResonatorSpec, target_f: f64, req: &Requirements) -> Result<RequirementReport> {
    spec.validate()?;
    let t = two_port_transmission(spec.kappa_i, spec.kappa_c1, spec.kappa_c2)?;
    let linewidth = spec.total_linewidth();
    let bandwidth_checked = match req.bandwidth_basis {
        BandwidthBasis::InternalRate => spec.kappa_i,
        BandwidthBasis::TotalLinewidth => linewidth,
    };
    let detuning = spec.f - target_f;
    Ok(RequirementReport {
        target_f,
        f: spec.f,
        detuning,
        insertion_loss_db: t.loss_db,
        linewidth,
        bandwidth_checked,
        centered: detuning.abs() <= req.centering_tolerance,
        attenuation_ok: (req.min_attenuation_db..=req.max_attenuation_db).contains(&t.loss_db),
        bandwidth_ok: (req.min_bandwidth..=req.max_bandwidth).contains(&bandwidth_checked),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{GHZ, MM, UM};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn skin_depths() {
        let cu = skin_depth(COPPER_RESISTIVITY_RT, 7.68 * GHZ).unwrap();
        assert_relative_eq!(cu, 0.748_796_804_190_242e-6, max_relative = 1e-9);
        assert!((cu / UM - 0.75).abs() < 0.01);
        let brass = skin_depth(BRASS_RESISTIVITY_RT, 7.52 * GHZ).unwrap();
        assert_relative_eq!(brass, 1.524_529_233_615_228e-6, max_relative = 1e-9);
        let quad = skin_depth(4.0 * COPPER_RESISTIVITY_RT, 7.68 * GHZ).unwrap();
        assert_relative_eq!(quad, 2.0 * cu, max_relative = 1e-14);
        assert!(skin_depth(0.0, 1.0).is_err());
    }

    #[test]
    fn q_from_gap() {
        let brass = AttenuatorGeometry::new(300.0 * UM, 22.0 * MM).unwrap();
        let d = skin_depth(BRASS_RESISTIVITY_RT, 7.52 * GHZ).unwrap();
        let q = q_estimate(&brass, d, 7.52 * GHZ).unwrap();
        assert_relative_eq!(q.q_internal, 196.782_057_952_793_6, max_relative = 1e-9);
        let measured = 7520.0 / 54.0;
        assert!(q.q_internal / measured < 3.0 && measured / q.q_internal < 3.0);

        let cu = AttenuatorGeometry::new(75.0 * UM, 22.0 * MM).unwrap();
        let d = skin_depth(COPPER_RESISTIVITY_RT, 7.68 * GHZ).unwrap();
        let q = q_estimate(&cu, d, 7.68 * GHZ).unwrap();
        assert!((q.q_internal - 100.0).abs() < 1.0);
        assert_relative_eq!(q.kappa_i, 7.68 * GHZ / q.q_internal);

        let doubled = q_estimate(&cu.with_geometry_factor(2.0).unwrap(), d, 7.68 * GHZ).unwrap();
        assert_relative_eq!(doubled.q_internal, 2.0 * q.q_internal, max_relative = 1e-14);
        assert!(matches!(q_estimate(&cu, 80.0 * UM, 1e9), Err(Error::OutOfModel(_))));
    }

    #[test]
    fn conductivity_ratios() {
        let r = conductivity_ratio_from_linewidths(69.0, 19.0).unwrap();
        assert!((r - 13.2).abs() < 0.05);
        let r = conductivity_ratio_from_linewidths(54.0, 44.0).unwrap();
        assert!((r - 1.51).abs() < 0.005);
        assert_eq!(conductivity_ratio_from_linewidths(7.0, 7.0).unwrap(), 1.0);
        assert!(conductivity_ratio_from_linewidths(0.0, 7.0).is_err());
    }

    #[test]
    fn halfwave() {
        let g = AttenuatorGeometry::new(300.0 * UM, 22.0 * MM).unwrap();
        let f = halfwave_frequency(&g).unwrap();
        assert_relative_eq!(f, 6.813_464_954_545_454 * GHZ, max_relative = 1e-12);
        let fc = halfwave_frequency(&g.with_length_correction(0.906).unwrap()).unwrap();
        assert!((fc / GHZ - 7.52).abs() < 0.005);
        let long = AttenuatorGeometry::new(300.0 * UM, 44.0 * MM).unwrap();
        assert_relative_eq!(halfwave_frequency(&long).unwrap(), f / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn contraction() {
        assert_eq!(contracted_frequency(7.52 * GHZ, 0.0).unwrap(), 7.52 * GHZ);
        let f = contracted_frequency(7.52 * GHZ, 0.0196).unwrap();
        assert!((f / GHZ - 7.67).abs() < 0.005);
        let f = contracted_frequency(7.68 * GHZ, 0.0141).unwrap();
        assert!((f / GHZ - 7.79).abs() < 0.005);
        assert!(contracted_frequency(7.0, 1.0).is_err());
        assert!(contracted_frequency(7.0, -0.1).is_err());
        let eps = contraction_from_frequencies(7.52, 7.67).unwrap();
        assert!((eps - 0.0196).abs() < 1e-4);
    }

    #[test]
    fn brass_device_meets_requirements() {
        let ki = 44.0 * MHZ;
        let spec = ResonatorSpec::new(7.67 * GHZ, ki, ki / 10.0, ki / 10.0).unwrap();
        let r = check_requirements(&spec, 7.67 * GHZ, &Requirements::default()).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert!((r.insertion_loss_db - 15.56).abs() < 0.01);
        assert_relative_eq!(r.linewidth, 52.8 * MHZ, max_relative = 1e-12);
    }

    #[test]
    fn failing_devices() {
        let spec = ResonatorSpec::new(7.67 * GHZ, 5.0 * MHZ, 0.5 * MHZ, 0.5 * MHZ).unwrap();
        let r = check_requirements(&spec, 7.67 * GHZ, &Requirements::default()).unwrap();
        assert!(!r.bandwidth_ok);
        assert!(r.attenuation_ok && r.centered);

        let spec = ResonatorSpec::new(7.67 * GHZ, 20.0 * MHZ, 20.0 * MHZ, 20.0 * MHZ).unwrap();
        let r = check_requirements(&spec, 7.67 * GHZ, &Requirements::default()).unwrap();
        assert_relative_eq!(r.insertion_loss_db, 10.0 * 2.25f64.log10(), max_relative = 1e-12);
        assert!(!r.attenuation_ok);

        let spec = ResonatorSpec::new(7.75 * GHZ, 30.0 * MHZ, 3.0 * MHZ, 3.0 * MHZ).unwrap();
        let r = check_requirements(&spec, 7.67 * GHZ, &Requirements::default()).unwrap();
        assert!(!r.centered);
    }

    #[test]
    fn total_linewidth_basis() {
        let ki = 44.0 * MHZ;
        let spec = ResonatorSpec::new(7.67 * GHZ, ki, ki / 10.0, ki / 10.0).unwrap();
        let req = Requirements {
            bandwidth_basis: BandwidthBasis::TotalLinewidth,
            ..Requirements::default()
        };
        let r = check_requirements(&spec, 7.67 * GHZ, &req).unwrap();
        assert_eq!(r.bandwidth_checked, r.linewidth);
        assert!(!r.bandwidth_ok);
    }

    proptest! {
        #[test]
        fn skin_depth_scaling(rho in 1e-9f64..1e-6, f in 1e8f64..1e11) {
            let d = skin_depth(rho, f).unwrap();
            let d4 = skin_depth(rho, 4.0 * f).unwrap();
            prop_assert!((d4 - d / 2.0).abs() <= 1e-14 * d);
        }

        #[test]
        fn q_times_delta_over_gap_is_g(gap in 1e-5f64..1e-2, frac in 1e-4f64..0.9, g in 0.1f64..10.0) {
            let geom = AttenuatorGeometry::new(gap, 0.02).unwrap().with_geometry_factor(g).unwrap();
            let delta = gap * frac;
            let q = q_estimate(&geom, delta, 7e9).unwrap();
            prop_assert!((q.q_internal * delta / gap - g).abs() <= 1e-12 * g);
        }

        #[test]
        fn conductivity_ratio_at_least_one(cold in 1e5f64..1e8, factor in 1.0f64..10.0) {
            prop_assert!(conductivity_ratio_from_linewidths(cold * factor, cold).unwrap() >= 1.0);
        }
    }
}
