//! Residual photon number from a noise-injection sweep.
//!
//! Each point gives Γ_φ = 1/T₂ₑ − 1/(2T₁) (never clipped at zero). The line
//! Γ_φ = A·(n_th + n_add) + Γ_offset is then fitted in one of two ways:
//!
//! - [`SlopeMode::Fitted`] (default): ordinary least squares for A and the
//!   intercept B; `n_th = B/A`, so any non-photon offset is absorbed into
//!   `n_th`.
//! - [`SlopeMode::Analytic`]: A fixed to κχ²/(κ² + χ²) (angular units) and a
//!   known offset subtracted; only the intercept is estimated.
//!
//! The interval on `n_th` is a percentile bootstrap over sweep points.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{z_score, FitResult, DEFAULT_COVERAGE};
use crate::dephasing::{dephasing_per_photon, pure_dephasing_from_times};
use crate::experiment::SweepDataset;
use crate::seed::{child_rng, stream};
use crate::{Error, Result};

pub const DEFAULT_BOOTSTRAP: usize = 1000;
const MIN_POINTS: usize = 3;
/// |A| at or below this many standard errors makes `n_th` indeterminate.
const SLOPE_SIGNIFICANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SlopeMode {
    #[default]
    Fitted,
    /// Slope fixed to the dephasing formula; `offset` (s⁻¹) is the known
    /// non-photon dephasing rate.
    Analytic { offset: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Multiplies every `n_add` before fitting (generator calibration).
    pub n_add_scale: f64,
    pub coverage: f64,
    /// 0 disables the bootstrap; the interval is then ±z·σ.
    pub n_bootstrap: usize,
    pub seed: u64,
    pub mode: SlopeMode,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            n_add_scale: 1.0,
            coverage: DEFAULT_COVERAGE,
            n_bootstrap: DEFAULT_BOOTSTRAP,
            seed: 0,
            mode: SlopeMode::Fitted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NthExtraction {
    pub n_th: FitResult,
    /// Γ_φ per added photon, s⁻¹.
    pub slope: FitResult,
    /// κχ²/(κ² + χ²) for comparison with the fitted slope, s⁻¹.
    pub analytic_slope: f64,
    pub mode: SlopeMode,
    pub n_points: usize,
    /// Resamples that produced a finite estimate.
    pub n_valid_resamples: usize,
    /// Γ_φ of each point, s⁻¹.
    pub gamma_phi: Vec<f64>,
}

impl NthExtraction {
    /// (fitted − analytic)/σ of the slope.
    pub fn slope_z(&self) -> f64 {
        (self.slope.estimate - self.analytic_slope) / self.slope.std_error
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    se_slope: f64,
    se_intercept: f64,
    cov: f64,
    ssr: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Option<Line> {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = if x.len() > 2 { ssr / (n - 2.0) } else { 0.0 };
    Some(Line {
        slope,
        intercept,
        se_slope: (s2 / sxx).sqrt(),
        se_intercept: (s2 * (1.0 / n + xm * xm / sxx)).sqrt(),
        cov: -xm * s2 / sxx,
        ssr,
    })
}

/// Point estimate of `n_th` for one (re)sample.
fn estimate(x: &[f64], y: &[f64], mode: SlopeMode, analytic: f64) -> Option<f64> {
    match mode {
        SlopeMode::Fitted => ols(x, y).map(|l| l.intercept / l.slope),
        SlopeMode::Analytic { offset } => {
            let n = x.len() as f64;
            Some((x.iter().zip(y).map(|(a, b)| b - analytic * a).sum::<f64>() / n - offset) / analytic)
        }
    }
    .filter(|v| v.is_finite())
}

/// Type-7 sample quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn bootstrap(x: &[f64], y: &[f64], opts: &ExtractOptions, analytic: f64) -> Vec<f64> {
    let n = x.len();
    let mut draws: Vec<f64> = (0..opts.n_bootstrap as u64)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = child_rng(opts.seed, &[stream::BOOTSTRAP, b]);
            let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n)
                .map(|_| {
                    let k = rng.random_range(0..n);
                    (x[k], y[k])
                })
                .unzip();
            estimate(&xs, &ys, opts.mode, analytic)
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    draws
}

/// Extracts the residual thermal photon number from a noise-injection
/// sweep measured with readout linewidth `kappa` and dispersive shift `chi`
/// (both Hz).
///
/// A negative `n_th` is returned as is; flooring at zero is left to
/// reporting.
pub fn extract_nth(sweep: &SweepDataset, kappa: f64, chi: f64, opts: &ExtractOptions) -> Result<NthExtraction> {
    let n = sweep.points.len();
    if n < MIN_POINTS {
        return Err(Error::invalid(format!("n_th extraction needs at least {MIN_POINTS} points, got {n}")));
    }
    if !(opts.n_add_scale > 0.0 && opts.n_add_scale.is_finite()) {
        return Err(Error::domain(format!("n_add scale must be > 0, got {}", opts.n_add_scale)));
    }
    z_score(opts.coverage)?;
    let analytic = dephasing_per_photon(kappa, chi)?;
    if let SlopeMode::Analytic { offset } = opts.mode {
        if !offset.is_finite() {
            return Err(Error::domain("dephasing offset must be finite"));
        }
        if analytic == 0.0 {
            return Err(Error::Indeterminate("analytic slope is zero".into()));
        }
    }

    let x: Vec<f64> = sweep.points.iter().map(|p| p.value * opts.n_add_scale).collect();
    let y = sweep
        .points
        .iter()
        .map(|p| Ok(pure_dephasing_from_times(p.coherence.t1.value, p.coherence.t2e.value)?.gamma_phi))
        .collect::<Result<Vec<f64>>>()?;

    let (n_th, se_nth, slope, residual_norm) = match opts.mode {
        SlopeMode::Fitted => {
            let line = ols(&x, &y).ok_or_else(|| Error::Indeterminate("all n_add values are equal".into()))?;
            let residual_norm = line.ssr.sqrt();
            if !(line.slope.abs() > SLOPE_SIGNIFICANCE * line.se_slope) {
                return Err(Error::Indeterminate(format!(
                    "fitted slope {:e} ± {:e} s^-1 is consistent with zero",
                    line.slope, line.se_slope
                )));
            }
            let (a, b) = (line.slope, line.intercept);
            let n_th = b / a;
            // delta method on B/A
            let var = (line.se_intercept / a).powi(2) + (b * line.se_slope / (a * a)).powi(2)
                - 2.0 * b * line.cov / a.powi(3);
            let slope = FitResult::from_std_error(a, line.se_slope, opts.coverage, residual_norm)?;
            (n_th, var.max(0.0).sqrt(), slope, residual_norm)
        }
        SlopeMode::Analytic { offset } => {
            let r: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - analytic * a).collect();
            let nf = n as f64;
            let mean = r.iter().sum::<f64>() / nf;
            let ssr: f64 = r.iter().map(|v| (v - mean).powi(2)).sum();
            let se = (ssr / (nf - 1.0) / nf).sqrt() / analytic.abs();
            let slope = FitResult::from_std_error(analytic, 0.0, opts.coverage, ssr.sqrt())?;
            ((mean - offset) / analytic, se, slope, ssr.sqrt())
        }
    };

    let mut n_valid = 0;
    let mut result = if opts.n_bootstrap == 0 {
        FitResult::from_std_error(n_th, se_nth, opts.coverage, residual_norm)?
    } else {
        let draws = bootstrap(&x, &y, opts, analytic);
        n_valid = draws.len();
        if n_valid * 2 < opts.n_bootstrap {
            return Err(Error::Indeterminate(format!(
                "only {n_valid} of {} bootstrap resamples gave a finite estimate",
                opts.n_bootstrap
            )));
        }
        let alpha = 1.0 - opts.coverage;
        FitResult {
            estimate: n_th,
            ci_low: quantile(&draws, 0.5 * alpha).min(n_th),
            ci_high: quantile(&draws, 1.0 - 0.5 * alpha).max(n_th),
            coverage: opts.coverage,
            std_error: se_nth,
            residual_norm,
            n_bootstrap: opts.n_bootstrap,
            seed: Some(opts.seed),
        }
    };
    result.seed = Some(opts.seed);

    Ok(NthExtraction {
        n_th: result,
        slope,
        analytic_slope: analytic,
        mode: opts.mode,
        n_points: n,
        n_valid_resamples: n_valid,
        gamma_phi: y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dephasing::{CoherenceSet, Measured, TransmonSpec};
    use crate::experiment::{simulate_noise_injection_sweep, DeviceConfig, SweepAxis, SweepPoint};
    use crate::modes::ResonatorSpec;
    use crate::thermal::{BathPort, ThermalEnvironment};
    use crate::units::{GHZ, MHZ, US};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const KAPPA: f64 = 8.0 * MHZ;
    const CHI: f64 = 1.1 * MHZ;

    fn exact_sweep(n_th: f64, offset: f64, n_add: &[f64]) -> SweepDataset {
        let a = dephasing_per_photon(KAPPA, CHI).unwrap();
        let t1 = 100.0 * US;
        let points = n_add
            .iter()
            .map(|&x| {
                let g2 = 0.5 / t1 + a * (n_th + x) + offset;
                SweepPoint {
                    value: x,
                    coherence: CoherenceSet::new(Measured::exact(t1), Measured::exact(1.0 / g2), None).unwrap(),
                }
            })
            .collect();
        SweepDataset {
            axis: SweepAxis::NAdd,
            points,
            seed: None,
            repeats: 1,
            config: None,
            warnings: vec![],
        }
    }

    fn grid() -> Vec<f64> {
        (0..8).map(|i| i as f64 * 1e-2 / 7.0).collect()
    }

    fn cu_config(n_th: f64, jitter: f64) -> DeviceConfig {
        DeviceConfig {
            transmon: TransmonSpec::new(4.75 * GHZ, 0.25 * GHZ, CHI, 1.0 / (100.0 * US)).unwrap(),
            readout: ResonatorSpec::new(7.857 * GHZ, 7.1 * MHZ, 0.9 * MHZ, 0.0).unwrap(),
            environment: ThermalEnvironment::new(
                vec![
                    BathPort::new("internal", 7.1 * MHZ, 0.0).unwrap(),
                    BathPort::new("external", 0.9 * MHZ, n_th * 8.0 / 0.9).unwrap(),
                ],
                vec![],
                300.0,
            )
            .unwrap(),
            extra_dephasing: 0.0,
            ramsey_excess: 0.0,
            t1_jitter: jitter,
            shots: None,
        }
    }

    #[test]
    fn noiseless_fitted() {
        let ds = exact_sweep(2e-4, 0.0, &grid());
        let ex = extract_nth(&ds, KAPPA, CHI, &ExtractOptions::default()).unwrap();
        assert_relative_eq!(ex.n_th.estimate, 2e-4, max_relative = 1e-6);
        assert_relative_eq!(ex.slope.estimate, ex.analytic_slope, max_relative = 1e-9);
        assert!(ex.n_th.ci_low <= ex.n_th.estimate && ex.n_th.estimate <= ex.n_th.ci_high);
    }

    #[test]
    fn analytic_mode_separates_offset() {
        let ds = exact_sweep(2e-4, 150.0, &grid());
        let opts = ExtractOptions {
            mode: SlopeMode::Analytic { offset: 150.0 },
            n_bootstrap: 200,
            ..Default::default()
        };
        let ex = extract_nth(&ds, KAPPA, CHI, &opts).unwrap();
        assert_relative_eq!(ex.n_th.estimate, 2e-4, max_relative = 1e-6);
        // fitted mode absorbs the offset
        let fitted = extract_nth(&ds, KAPPA, CHI, &ExtractOptions::default()).unwrap();
        assert!(fitted.n_th.estimate > 3e-4);
    }

    #[test]
    fn negative_nth_is_not_floored() {
        let ds = exact_sweep(-1e-4, 0.0, &grid());
        let ex = extract_nth(&ds, KAPPA, CHI, &ExtractOptions { n_bootstrap: 0, ..Default::default() }).unwrap();
        assert!(ex.n_th.estimate < 0.0);
    }

    #[test]
    fn indeterminate_slope() {
        let ds = exact_sweep(2e-4, 0.0, &[0.0, 0.0, 0.0]);
        assert!(matches!(extract_nth(&ds, KAPPA, CHI, &ExtractOptions::default()), Err(Error::Indeterminate(_))));
        // Γ_φ independent of n_add
        let mut flat = exact_sweep(2e-4, 0.0, &grid());
        let c0 = flat.points[0].coherence.clone();
        for p in &mut flat.points {
            p.coherence = c0.clone();
        }
        assert!(matches!(extract_nth(&flat, KAPPA, CHI, &ExtractOptions::default()), Err(Error::Indeterminate(_))));
        assert!(extract_nth(&exact_sweep(2e-4, 0.0, &[0.0, 1e-3]), KAPPA, CHI, &ExtractOptions::default()).is_err());
    }

    #[test]
    fn scale_is_pass_through() {
        let ds = exact_sweep(2e-4, 0.0, &grid());
        let mut halved = ds.clone();
        for p in &mut halved.points {
            p.value *= 0.5;
        }
        let opts = ExtractOptions { n_add_scale: 2.0, n_bootstrap: 0, ..Default::default() };
        let ex = extract_nth(&halved, KAPPA, CHI, &opts).unwrap();
        assert_relative_eq!(ex.n_th.estimate, 2e-4, max_relative = 1e-6);
    }

    #[test]
    fn bootstrap_is_reproducible_and_seeded() {
        let cfg = cu_config(2e-4, 0.08);
        let ds = simulate_noise_injection_sweep(&cfg, &grid(), 10, 3).unwrap();
        let opts = ExtractOptions { seed: 5, ..Default::default() };
        let a = extract_nth(&ds, cfg.kappa(), CHI, &opts).unwrap();
        let b = extract_nth(&ds, cfg.kappa(), CHI, &opts).unwrap();
        assert_eq!(a, b);
        let c = extract_nth(&ds, cfg.kappa(), CHI, &ExtractOptions { seed: 6, ..opts }).unwrap();
        assert_ne!(a.n_th.ci_low, c.n_th.ci_low);
        assert_eq!(a.n_th.estimate, c.n_th.estimate);
    }

    #[test]
    fn interval_shrinks_with_repeats() {
        let cfg = cu_config(2e-4, 0.08);
        let width = |repeats| {
            let ds = simulate_noise_injection_sweep(&cfg, &grid(), repeats, 17).unwrap();
            let ex = extract_nth(&ds, cfg.kappa(), CHI, &ExtractOptions { seed: 1, ..Default::default() }).unwrap();
            ex.n_th.width()
        };
        let (w10, w100) = (width(10), width(100));
        assert!(w100 < w10, "width at 100 repeats {w100} vs 10 repeats {w10}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn affine_reparametrization(n_th in 0.0f64..1e-3, shift in 0.0f64..5e-3) {
            let base = grid();
            let a = extract_nth(&exact_sweep(n_th, 0.0, &base), KAPPA, CHI, &ExtractOptions { n_bootstrap: 0, ..Default::default() }).unwrap();
            let shifted: Vec<f64> = base.iter().map(|x| x + shift).collect();
            let b = extract_nth(&exact_sweep(n_th - shift, 0.0, &shifted), KAPPA, CHI, &ExtractOptions { n_bootstrap: 0, ..Default::default() }).unwrap();
            prop_assert!((b.n_th.estimate + shift - a.n_th.estimate).abs() < 1e-9);
        }

        #[test]
        fn quantile_within_range(mut v in proptest::collection::vec(-1e3f64..1e3, 1..50), q in 0.0f64..=1.0) {
            v.sort_by(f64::total_cmp);
            let x = quantile(&v, q);
            prop_assert!(v[0] <= x && x <= v[v.len() - 1]);
        }
    }
}
