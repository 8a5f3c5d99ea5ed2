//! Physical constants (CODATA 2018 exact or recommended values) and the
//! unit factors used at the file/CLI boundary.

/// Planck constant, J·s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const GHZ: f64 = 1e9;
pub const MHZ: f64 = 1e6;
pub const KHZ: f64 = 1e3;
pub const US: f64 = 1e-6;
pub const MS: f64 = 1e-3;
pub const MK: f64 = 1e-3;
pub const UM: f64 = 1e-6;
pub const MM: f64 = 1e-3;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn angular(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f
}

/// Power ratio to attenuation in dB (positive for loss).
#[inline]
pub fn ratio_to_loss_db(ratio: f64) -> f64 {
    -10.0 * ratio.log10()
}

/// Attenuation in dB to the transmitted power ratio.
#[inline]
pub fn loss_db_to_ratio(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}
