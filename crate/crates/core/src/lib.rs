//! Modeling and analysis toolkit for thermal-photon dephasing of transmon
//! qubits read out through dissipative cavity attenuators.
//!
//! Internally every quantity is SI: frequencies and rates in Hz (rates are
//! ordinary frequencies, i.e. κ/2π), times in seconds, temperatures in
//! kelvin. Conversion to angular units happens only inside the dephasing
//! rate formula. The [`config`] module is the only place where the
//! GHz/MHz/µs/mK boundary conventions appear.
//!
//! Module map:
//!
//! - [`thermal`]: Bose–Einstein thermometry, bath mixing, attenuation chains
//! - [`modes`]: two-mode hybridization and resonator response formulas
//! - [`dephasing`]: photon-shot-noise dephasing and coherence-time algebra
//! - [`design`]: order-of-magnitude cavity attenuator estimators
//! - [`experiment`]: seeded synthetic traces and sweeps
//! - [`analysis`]: exponential fits, `n_th` extraction, reports
//! - [`reproduce`]: reference-data reproduction checks

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod dephasing;
pub mod design;
mod error;
pub mod experiment;
pub mod modes;
pub mod reproduce;
pub mod seed;
pub mod thermal;
pub mod units;

pub use error::{Error, Result};

/// Crate version recorded in sidecars and run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
