//! Seeded synthetic measurements: decay traces, temperature sweeps and
//! noise-injection sweeps.
//!
//! Every stochastic draw comes from a ChaCha8 stream derived from one master
//! seed with [`crate::seed::child_rng`]. Sweep point `i`, repeat `r` uses the
//! path `[SWEEP, i, r]`, so points can be evaluated in any order (and in
//! parallel) and still produce bit-identical datasets.

use std::io::Read;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::fit_exponential;
use crate::dephasing::{thermal_dephasing_rate, CoherenceSet, Measured, TransmonSpec, PHOTON_NUMBER_VALIDITY_LIMIT};
use crate::modes::ResonatorSpec;
use crate::seed::{child_rng, stream};
use crate::thermal::{bose_einstein_occupation, ThermalEnvironment};
use crate::units::{MK, US};
use crate::{Error, Result};

/// Label of the bath port whose occupation follows the sample temperature.
pub const INTERNAL_PORT: &str = "internal";
/// Allowed temperature range of [`simulate_temperature_sweep`], kelvin.
pub const TEMPERATURE_RANGE: (f64, f64) = (0.01, 0.2);
/// Upper limit on the fractional T₁ jitter.
pub const MAX_T1_JITTER: f64 = 0.5;
/// σ assigned to every point of a noiseless trace.
pub const EXACT_SIGMA: f64 = 1e-9;

const TRACE_POINTS: usize = 41;
const T1_SPAN: f64 = 5.0;
const ECHO_SPAN: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    T1,
    Ramsey,
    Echo,
}

impl TraceKind {
    /// (baseline, amplitude) of the excited-state population.
    pub fn envelope(self) -> (f64, f64) {
        match self {
            TraceKind::T1 => (0.0, 1.0),
            TraceKind::Ramsey | TraceKind::Echo => (0.5, 0.5),
        }
    }
}

/// Number of single-shot readouts per trace point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shots {
    /// Infinite-shot limit: exact populations with σ = [`EXACT_SIGMA`].
    Exact,
    Finite(u32),
}

impl Shots {
    pub fn from_option(shots: Option<u32>) -> Self {
        shots.map_or(Shots::Exact, Shots::Finite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// Seconds, strictly increasing.
    pub times: Vec<f64>,
    pub populations: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub kind: TraceKind,
}

/// `n` evenly spaced times from 0 to `t_max` inclusive.
pub fn linear_times(t_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}

fn sample_population<R: Rng>(p: f64, shots: Shots, rng: &mut R) -> Result<(f64, f64)> {
    match shots {
        Shots::Exact => Ok((p, EXACT_SIGMA)),
        Shots::Finite(n) => {
            let nf = n as f64;
            let k = Binomial::new(n as u64, p.clamp(0.0, 1.0))
                .map_err(|e| Error::domain(format!("binomial sampling: {e}")))?
                .sample(rng);
            // σ from the true p, floored at one count so p ∈ {0, 1} keeps σ > 0
            let sigma = ((p * (1.0 - p)).max(1.0 / nf) / nf).sqrt();
            Ok((k as f64 / nf, sigma))
        }
    }
}

/// Synthetic decay trace `baseline + amplitude·exp(−rate·t)` with binomial
/// readout noise.
pub fn simulate_trace(kind: TraceKind, rate: f64, times: &[f64], shots: Shots, seed: u64) -> Result<Trace> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!("decay rate must be >= 0, got {rate}")));
    }
    if shots == Shots::Finite(0) {
        return Err(Error::domain("shots must be >= 1"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::invalid("trace times must be finite, >= 0 and strictly increasing"));
    }
    let (base, amp) = kind.envelope();
    let mut rng = child_rng(seed, &[stream::TRACE]);
    let mut populations = Vec::with_capacity(times.len());
    let mut sigmas = Vec::with_capacity(times.len());
    for &t in times {
        let (p, s) = sample_population(base + amp * (-rate * t).exp(), shots, &mut rng)?;
        populations.push(p);
        sigmas.push(s);
    }
    Ok(Trace {
        times: times.to_vec(),
        populations,
        sigmas,
        kind,
    })
}

/// One device as seen by the simulator. All quantities SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub transmon: TransmonSpec,
    /// Dressed readout mode.
    pub readout: ResonatorSpec,
    pub environment: ThermalEnvironment,
    /// Non-photon echo dephasing, s⁻¹.
    pub extra_dephasing: f64,
    /// Additional Ramsey-only dephasing, s⁻¹.
    pub ramsey_excess: f64,
    /// Fractional log-normal σ of T₁ between repeats.
    pub t1_jitter: f64,
    /// `None` for the infinite-shot limit.
    pub shots: Option<u32>,
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        self.transmon.validate()?;
        self.readout.validate()?;
        self.environment.validate()?;
        for (name, v) in [("extra dephasing", self.extra_dephasing), ("Ramsey excess", self.ramsey_excess)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..=MAX_T1_JITTER).contains(&self.t1_jitter) {
            return Err(Error::invalid(format!(
                "T1 jitter must lie in [0, {MAX_T1_JITTER}], got {}",
                self.t1_jitter
            )));
        }
        if self.shots == Some(0) {
            return Err(Error::invalid("shots must be >= 1"));
        }
        Ok(())
    }

    /// Total readout linewidth κ used in the dephasing formula, Hz.
    pub fn kappa(&self) -> f64 {
        self.readout.total_linewidth()
    }

    /// Residual thermal occupation of the readout mode.
    pub fn thermal_occupation(&self) -> Result<f64> {
        self.environment.mode_occupation()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Added photon number (dimensionless).
    NAdd,
    /// Sample temperature; kelvin in memory, mK in CSV.
    Temperature,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::NAdd => "n_add",
            SweepAxis::Temperature => "temperature",
        }
    }

    fn csv_scale(self) -> f64 {
        match self {
            SweepAxis::NAdd => 1.0,
            SweepAxis::Temperature => MK,
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_add" => Ok(SweepAxis::NAdd),
            "temperature" => Ok(SweepAxis::Temperature),
            other => Err(Error::invalid(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub coherence: CoherenceSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDataset {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    /// Master seed; `None` for data read from an external CSV.
    pub seed: Option<u64>,
    pub repeats: u32,
    pub config: Option<DeviceConfig>,
    pub warnings: Vec<String>,
}

/// Metadata written next to a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSidecar {
    pub axis: SweepAxis,
    pub seed: Option<u64>,
    pub repeats: u32,
    pub tool_version: String,
    pub config: Option<DeviceConfig>,
    pub warnings: Vec<String>,
}

pub const CSV_HEADER: [&str; 7] = ["axis", "value", "t1_us", "t1_err", "t2e_us", "t2e_err", "tphi_us"];

fn fmt_value(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        x.to_string()
    }
}

fn parse_value(s: &str, line: usize, column: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::invalid(format!("line {line}, column `{column}`: cannot parse `{s}` as a number")))
}

impl SweepDataset {
    pub fn axis_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn sidecar(&self) -> SweepSidecar {
        SweepSidecar {
            axis: self.axis,
            seed: self.seed,
            repeats: self.repeats,
            tool_version: crate::VERSION.to_string(),
            config: self.config.clone(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        let scale = self.axis.csv_scale();
        for p in &self.points {
            let c = &p.coherence;
            w.write_record([
                self.axis.as_str().to_string(),
                fmt_value(p.value / scale),
                fmt_value(c.t1.value / US),
                fmt_value(c.t1.sigma / US),
                fmt_value(c.t2e.value / US),
                fmt_value(c.t2e.sigma / US),
                fmt_value(c.t_phi.value / US),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
    }

    /// Reads a sweep CSV. Axis values must be nondecreasing; repeated values
    /// are kept as independent points. `tphi_us` is recomputed, not trusted.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(Error::invalid(format!(
                "unexpected sweep CSV header `{}`; expected `{}`",
                header.join(","),
                CSV_HEADER.join(",")
            )));
        }
        let mut axis: Option<SweepAxis> = None;
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let a: SweepAxis = rec[0].parse()?;
            if *axis.get_or_insert(a) != a {
                return Err(Error::invalid(format!("line {line}: mixed sweep axes")));
            }
            let get = |k: usize| parse_value(&rec[k], line, CSV_HEADER[k]);
            let value = get(1)? * a.csv_scale();
            let t1 = Measured::new(get(2)? * US, get(3)? * US);
            let t2e = Measured::new(get(4)? * US, get(5)? * US);
            let coherence = CoherenceSet::new(t1, t2e, None)
                .map_err(|e| Error::invalid(format!("line {line}: {e}")))?;
            points.push(SweepPoint { value, coherence });
        }
        if points.windows(2).any(|w| w[1].value < w[0].value) {
            return Err(Error::invalid("sweep axis values must be nondecreasing"));
        }
        Ok(Self {
            axis: axis.unwrap_or(SweepAxis::NAdd),
            points,
            seed: None,
            repeats: 1,
            config: None,
            warnings: Vec::new(),
        })
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::from_csv_reader(s.as_bytes())
    }
}

/// Mean and sample standard deviation. The mean is accumulated as offsets
/// from the first element so identical inputs reproduce exactly.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let first = xs[0];
    let mean = first + xs.iter().map(|x| x - first).sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Measured decay time for a true `rate`: exact in the infinite-shot limit,
/// otherwise a fit to a simulated trace.
fn measure_time<R: Rng>(kind: TraceKind, rate: f64, span: f64, shots: Shots, rng: &mut R) -> Result<f64> {
    match shots {
        Shots::Exact => Ok(1.0 / rate),
        Shots::Finite(_) => {
            let times = linear_times(span / rate, TRACE_POINTS);
            let trace = simulate_trace(kind, rate, &times, shots, rng.random())?;
            let fit = fit_exponential(&trace)?;
            if !(fit.rate.estimate > 0.0) {
                return Err(Error::NonConvergence(format!(
                    "{kind:?} trace fit returned non-positive rate {}",
                    fit.rate.estimate
                )));
            }
            Ok(1.0 / fit.rate.estimate)
        }
    }
}

/// One sweep point: `repeats` measurements of T₁, T₂ₑ and T₂ᵣ at a fixed
/// photon number, aggregated to mean ± sample standard deviation.
///
/// T₁ is redrawn independently for the T₁ and echo measurements, since they
/// are taken at different times.
fn simulate_point(cfg: &DeviceConfig, n_bar: f64, repeats: u32, seed: u64, index: u64) -> Result<CoherenceSet> {
    let shots = Shots::from_option(cfg.shots);
    let t1_true = cfg.transmon.t1();
    let gamma_th = thermal_dephasing_rate(n_bar, cfg.kappa(), cfg.transmon.chi)?;
    let sigma = cfg.t1_jitter;
    // mean-preserving log-normal: E[T₁] equals the configured value
    let jitter = |rng: &mut rand_chacha::ChaCha8Rng| {
        if sigma == 0.0 {
            t1_true
        } else {
            let z: f64 = rng.sample(StandardNormal);
            t1_true * (sigma * z - 0.5 * sigma * sigma).exp()
        }
    };
    let mut t1s = Vec::with_capacity(repeats as usize);
    let mut t2es = Vec::with_capacity(repeats as usize);
    let mut t2rs = Vec::with_capacity(repeats as usize);
    for r in 0..repeats as u64 {
        let mut rng = child_rng(seed, &[stream::SWEEP, index, r]);
        let t1a = jitter(&mut rng);
        let t1b = jitter(&mut rng);
        let gamma_2e = 0.5 / t1b + cfg.extra_dephasing + gamma_th;
        let gamma_2r = gamma_2e + cfg.ramsey_excess;
        t1s.push(measure_time(TraceKind::T1, 1.0 / t1a, T1_SPAN, shots, &mut rng)?);
        t2es.push(measure_time(TraceKind::Echo, gamma_2e, ECHO_SPAN, shots, &mut rng)?);
        t2rs.push(measure_time(TraceKind::Ramsey, gamma_2r, ECHO_SPAN, shots, &mut rng)?);
    }
    let (t1, t1_err) = mean_std(&t1s);
    let (t2e, t2e_err) = mean_std(&t2es);
    let (t2r, t2r_err) = mean_std(&t2rs);
    CoherenceSet::new(
        Measured::new(t1, t1_err),
        Measured::new(t2e, t2e_err),
        Some(Measured::new(t2r, t2r_err)),
    )
}

fn check_axis(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{what} list is empty")));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!("{what} values must be strictly increasing")));
    }
    Ok(())
}

fn check_repeats(repeats: u32) -> Result<()> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be >= 1"));
    }
    Ok(())
}

/// Echo/T₁ sweep versus injected photon number `n_add` on top of the
/// configured thermal occupation.
pub fn simulate_noise_injection_sweep(cfg: &DeviceConfig, n_add: &[f64], repeats: u32, seed: u64) -> Result<SweepDataset> {
    cfg.validate()?;
    check_repeats(repeats)?;
    check_axis(n_add, "n_add")?;
    if n_add.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
        return Err(Error::domain("n_add values must be finite and >= 0"));
    }
    let n_th = cfg.thermal_occupation()?;
    let mut warnings = Vec::new();
    let n_max = n_th + n_add[n_add.len() - 1];
    if n_max > PHOTON_NUMBER_VALIDITY_LIMIT {
        let msg = format!("total photon number reaches {n_max:.3}, beyond the n << 1 regime of the dephasing model");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let points = n_add
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            Ok(SweepPoint {
                value: n,
                coherence: simulate_point(cfg, n_th + n, repeats, seed, i as u64)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepDataset {
        axis: SweepAxis::NAdd,
        points,
        seed: Some(seed),
        repeats,
        config: Some(cfg.clone()),
        warnings,
    })
}

/// Coherence versus sample temperature. The port labeled [`INTERNAL_PORT`]
/// is set to the Bose–Einstein occupation at the readout frequency; other
/// ports keep their configured occupations. T₁ is held at its baseline.
pub fn simulate_temperature_sweep(cfg: &DeviceConfig, temperatures: &[f64], repeats: u32, seed: u64) -> Result<SweepDataset> {
    cfg.validate()?;
    check_repeats(repeats)?;
    check_axis(temperatures, "temperature")?;
    let (lo, hi) = TEMPERATURE_RANGE;
    if let Some(t) = temperatures.iter().find(|t| !(**t >= lo && **t <= hi)) {
        return Err(Error::domain(format!(
            "temperature {t} K outside the supported range [{lo}, {hi}] K"
        )));
    }
    if cfg.environment.port(INTERNAL_PORT).is_none() {
        return Err(Error::invalid(format!(
            "temperature sweep needs a bath port labeled `{INTERNAL_PORT}`"
        )));
    }
    let points = temperatures
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let n_int = bose_einstein_occupation(cfg.readout.f, t)?;
            let n = cfg.environment.with_port_occupation(INTERNAL_PORT, n_int)?.mode_occupation()?;
            Ok(SweepPoint {
                value: t,
                coherence: simulate_point(cfg, n, repeats, seed, i as u64)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepDataset {
        axis: SweepAxis::Temperature,
        points,
        seed: Some(seed),
        repeats,
        config: Some(cfg.clone()),
        warnings: Vec::new(),
    })
}
