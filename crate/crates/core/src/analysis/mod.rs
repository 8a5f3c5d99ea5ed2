//! Fitting and extraction: exponential decay fits, `n_th` regression with
//! bootstrap intervals, and coherence reports.

mod fit;
mod regression;
mod report;

pub use fit::{fit_exponential, ExponentialFit, Solver};
pub use regression::{extract_nth, ExtractOptions, NthExtraction, SlopeMode, DEFAULT_BOOTSTRAP};
pub use report::{coherence_report, render_csv, render_json, render_text, round_sig, ReportRow};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Default two-sided coverage of reported intervals.
pub const DEFAULT_COVERAGE: f64 = 0.95;

/// A parameter estimate with an interval of stated coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub coverage: f64,
    /// One-sigma standard error (covariance or delta method).
    pub std_error: f64,
    pub residual_norm: f64,
    /// Number of bootstrap resamples behind the interval; 0 when the
    /// interval comes from the covariance matrix.
    pub n_bootstrap: usize,
    pub seed: Option<u64>,
}

impl FitResult {
    /// Normal-approximation interval estimate ± z·σ.
    pub fn from_std_error(estimate: f64, std_error: f64, coverage: f64, residual_norm: f64) -> Result<Self> {
        let half = z_score(coverage)? * std_error;
        let half = if half.is_nan() { f64::INFINITY } else { half };
        Ok(Self {
            estimate,
            ci_low: estimate - half,
            ci_high: estimate + half,
            coverage,
            std_error,
            residual_norm,
            n_bootstrap: 0,
            seed: None,
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    /// Distance above the estimate to the upper bound.
    pub fn plus(&self) -> f64 {
        self.ci_high - self.estimate
    }

    /// Distance below the estimate to the lower bound.
    pub fn minus(&self) -> f64 {
        self.estimate - self.ci_low
    }
}

/// Two-sided standard-normal quantile for `coverage`.
pub fn z_score(coverage: f64) -> Result<f64> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::domain(format!("coverage must lie in (0, 1), got {coverage}")));
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(0.5 + 0.5 * coverage))
}
