//! Reference data for the measured devices and a self-check suite that
//! re-derives the published numbers from it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{coherence_report, extract_nth, ExtractOptions};
use crate::dephasing::{
    pure_dephasing_from_times, predict_coherence, thermal_dephasing_rate, tphi_from_ratio,
};
use crate::design::{conductivity_ratio_from_linewidths, q_estimate, skin_depth, AttenuatorGeometry};
use crate::experiment::{simulate_noise_injection_sweep, simulate_temperature_sweep};
use crate::modes::{hybridize, infer_coupling, insertion_loss_to_coupling, two_port_transmission};
use crate::seed::child_rng;
use crate::thermal::{bose_einstein_occupation, effective_temperature, mixed_bath_occupation, BathPort};
use crate::units::{GHZ, MHZ, MK, MS, US};
use crate::{Error, Result};

/// Measured device parameters.
pub mod reference {
    use crate::dephasing::{CoherenceSet, TransmonSpec};
    use crate::experiment::DeviceConfig;
    use crate::modes::ResonatorSpec;
    use crate::thermal::{BathPort, ThermalEnvironment};
    use crate::units::{GHZ, MHZ, US};
    use crate::Result;

    /// One attenuator characterized at room temperature and at 15 mK.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct AttenuatorRow {
        pub material: &'static str,
        pub gap_um: f64,
        pub f_rt_ghz: f64,
        pub kappa_i_rt_mhz: f64,
        pub f_cold_ghz: f64,
        pub kappa_i_cold_mhz: f64,
    }

    pub const ATTENUATORS: [AttenuatorRow; 3] = [
        AttenuatorRow {
            material: "brass",
            gap_um: 300.0,
            f_rt_ghz: 7.52,
            kappa_i_rt_mhz: 54.0,
            f_cold_ghz: 7.67,
            kappa_i_cold_mhz: 44.0,
        },
        AttenuatorRow {
            material: "copper",
            gap_um: 75.0,
            f_rt_ghz: 7.68,
            kappa_i_rt_mhz: 69.0,
            f_cold_ghz: 7.79,
            kappa_i_cold_mhz: 19.0,
        },
        AttenuatorRow {
            material: "copper",
            gap_um: 125.0,
            f_rt_ghz: 7.68,
            kappa_i_rt_mhz: 62.0,
            f_cold_ghz: 7.75,
            kappa_i_cold_mhz: 24.0,
        },
    ];

    /// Brass attenuator cavity length, mm.
    pub const BRASS_LENGTH_MM: f64 = 22.0;

    /// (label, f_ge GHz, anharmonicity GHz).
    pub const TRANSMONS: [(&str, f64, f64); 2] = [("A", 4.75, 0.25), ("B", 5.09, 0.25)];

    /// Readout mode of one setup at 25 mK with its coherence summary.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct ReadoutRow {
        pub label: &'static str,
        pub f_ro_ghz: f64,
        /// `None` where the internal rate was below fitting errors.
        pub kappa_i_mhz: Option<f64>,
        pub kappa_c_mhz: f64,
        pub chi_mhz: f64,
        /// T₂ₑ/2T₁ as (value, minus, plus).
        pub ratio: (f64, f64, f64),
        pub n_th_bound: f64,
        pub t_eff_mk: f64,
        /// T₁ used to synthesize a coherence point for this row, µs.
        pub nominal_t1_us: f64,
    }

    pub const READOUT_ROWS: [ReadoutRow; 4] = [
        ReadoutRow {
            label: "None",
            f_ro_ghz: 7.573,
            kappa_i_mhz: None,
            kappa_c_mhz: 16.5,
            chi_mhz: 1.5,
            ratio: (0.72, 0.12, 0.12),
            n_th_bound: 4e-3,
            t_eff_mk: 65.0,
            // T_φ ≈ 0.3 ms together with a ratio of 0.72
            nominal_t1_us: 58.0,
        },
        ReadoutRow {
            label: "Al",
            f_ro_ghz: 7.847,
            kappa_i_mhz: None,
            kappa_c_mhz: 0.24,
            chi_mhz: 1.1,
            ratio: (0.75, 0.06, 0.06),
            n_th_bound: 1e-3,
            t_eff_mk: 55.0,
            nominal_t1_us: 100.0,
        },
        ReadoutRow {
            label: "Brass",
            f_ro_ghz: 7.573,
            kappa_i_mhz: Some(11.4),
            kappa_c_mhz: 1.9,
            chi_mhz: 1.2,
            ratio: (0.98, 0.08, 0.02),
            n_th_bound: 4e-4,
            t_eff_mk: 46.0,
            nominal_t1_us: 100.0,
        },
        ReadoutRow {
            label: "Cu",
            f_ro_ghz: 7.857,
            kappa_i_mhz: Some(7.1),
            kappa_c_mhz: 0.9,
            chi_mhz: 1.1,
            ratio: (1.00, 0.12, 0.0),
            n_th_bound: 2e-4,
            t_eff_mk: 44.0,
            nominal_t1_us: 100.0,
        },
    ];

    /// Dressed mode frequencies (GHz) and lower-mode participation in the
    /// readout cavity for the brass setup.
    pub const HYBRIDIZED: (f64, f64, f64) = (7.573, 7.719, 0.79);

    /// Nominal average T_φ of the attenuated setups, seconds.
    pub const NOMINAL_TPHI: f64 = 10e-3;

    /// Device for a readout row with the thermal occupation set to `n_th`.
    /// Rows with internal loss get an `internal` port at zero occupation and
    /// an `external` port carrying all photons; rows without get a single
    /// `external` port.
    pub fn row_config(row: &ReadoutRow, n_th: f64, t1_us: f64) -> Result<DeviceConfig> {
        let (_, f_ge, alpha) = TRANSMONS[0];
        let kc = row.kappa_c_mhz * MHZ;
        let (ki, ports) = match row.kappa_i_mhz {
            Some(k) => {
                let ki = k * MHZ;
                (
                    ki,
                    vec![
                        BathPort::new("internal", ki, 0.0)?,
                        BathPort::new("external", kc, n_th * (ki + kc) / kc)?,
                    ],
                )
            }
            None => (0.0, vec![BathPort::new("external", kc, n_th)?]),
        };
        Ok(DeviceConfig {
            transmon: TransmonSpec::new(f_ge * GHZ, alpha * GHZ, row.chi_mhz * MHZ, 1.0 / (t1_us * US))?,
            readout: ResonatorSpec::new(row.f_ro_ghz * GHZ, ki, kc, 0.0)?,
            environment: ThermalEnvironment::new(ports, vec![], 300.0)?,
            extra_dephasing: 0.0,
            ramsey_excess: 0.0,
            t1_jitter: 0.0,
            shots: None,
        })
    }

    /// One report input per readout row: the device plus a coherence point
    /// at the nominal T₁ whose pure dephasing equals the photon bound.
    pub fn table_rows() -> Result<Vec<(String, DeviceConfig, CoherenceSet)>> {
        READOUT_ROWS
            .iter()
            .map(|row| {
                let cfg = row_config(row, row.n_th_bound, row.nominal_t1_us)?;
                let n = cfg.thermal_occupation()?;
                let coh = crate::dephasing::predict_coherence(cfg.transmon.t1(), n, cfg.kappa(), cfg.transmon.chi, 0.0)?;
                Ok((row.label.to_string(), cfg, coh))
            })
            .collect()
    }

    /// Noise-injection device: copper row with T₁ = 100 µs, 8% T₁ jitter,
    /// and a residual occupation of 2×10⁻⁴.
    pub fn injection_config() -> Result<DeviceConfig> {
        let mut cfg = row_config(&READOUT_ROWS[3], 2e-4, 100.0)?;
        cfg.t1_jitter = 0.08;
        Ok(cfg)
    }

    /// Brass row device with a residual occupation of 4×10⁻⁴.
    pub fn brass_config() -> Result<DeviceConfig> {
        row_config(&READOUT_ROWS[2], 4e-4, 100.0)
    }
}

/// Result of one self-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{mark}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Effective-temperature bounds of the four readout setups.
    Table3,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table3" => Ok(Suite::Table3),
            "all" => Ok(Suite::All),
            other => Err(Error::invalid(format!("unknown suite `{other}` (expected table3 or all)"))),
        }
    }
}

/// Master seed of the stochastic checks.
pub const SEED: u64 = 42;
/// Number of random forward/inverse hybridization round trips.
pub const ROUND_TRIPS: usize = 1000;

fn outcome(id: &str, name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        id: id.to_string(),
        name: name.to_string(),
        passed,
        detail,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// T_φ from a photon number n̄ through the dephasing formula.
pub fn check_dephasing_time() -> Result<CheckOutcome> {
    let rate = thermal_dephasing_rate(4e-3, 16.5 * MHZ, 1.5 * MHZ)?;
    let t_phi = 1.0 / rate;
    Ok(outcome(
        "1",
        "dephasing time",
        rel(t_phi, 0.3 * MS) <= 0.05,
        format!("T_phi = {:.4} ms (reference 0.3 ms, tolerance 5%)", t_phi / MS),
    ))
}

pub fn check_teff_bounds() -> Result<CheckOutcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for row in &reference::READOUT_ROWS {
        let t = effective_temperature(row.f_ro_ghz * GHZ, row.n_th_bound)? / MK;
        pass &= (t - row.t_eff_mk).abs() <= 2.0;
        parts.push(format!("{} {:.2} mK (<= {})", row.label, t, row.t_eff_mk));
    }
    Ok(outcome("2", "effective temperature bounds", pass, parts.join(", ")))
}

/// The same bounds reached through the report pipeline from synthesized
/// coherence points.
pub fn check_report_bounds() -> Result<CheckOutcome> {
    let rows = coherence_report(&reference::table_rows()?)?;
    let mut pass = rows.len() == reference::READOUT_ROWS.len();
    let mut parts = Vec::new();
    for (r, want) in rows.iter().zip(&reference::READOUT_ROWS) {
        let t = r.t_eff_bound / MK;
        pass &= !r.below_sensitivity && (t - want.t_eff_mk).abs() <= 2.0;
        parts.push(format!("{} {:.2} mK", r.label, t));
    }
    Ok(outcome("2r", "report bounds", pass, parts.join(", ")))
}

pub fn check_bath_mixing() -> Result<CheckOutcome> {
    let n_c = 3.5e-3;
    let kappa = 1.7 * MHZ;
    let n = mixed_bath_occupation(&[
        BathPort::new("internal", 6.0 * kappa, 0.0)?,
        BathPort::new("external", kappa, n_c)?,
    ])?;
    Ok(outcome(
        "3",
        "bath mixing",
        n == n_c / 7.0,
        format!("n = {n:e}, n_c/7 = {:e}", n_c / 7.0),
    ))
}

pub fn check_bose_einstein() -> Result<CheckOutcome> {
    let f = 7.5 * GHZ;
    let n = bose_einstein_occupation(f, 20.0 * MK)?;
    let in_range = (0.5e-8..=5e-8).contains(&n);
    let mut worst: f64 = 0.0;
    for t_mk in [10.0, 15.0, 20.0, 25.0, 50.0, 120.0, 1000.0, 300_000.0] {
        let t = t_mk * MK;
        let back = effective_temperature(f, bose_einstein_occupation(f, t)?)?;
        worst = worst.max(rel(back, t));
    }
    Ok(outcome(
        "4",
        "Bose-Einstein occupation",
        in_range && worst <= 1e-10,
        format!("n(7.5 GHz, 20 mK) = {n:.4e}; worst inverse round trip {worst:.1e}"),
    ))
}

pub fn check_transmission() -> Result<CheckOutcome> {
    let ki = 1.0;
    let il = two_port_transmission(ki, ki / 10.0, ki / 10.0)?.loss_db;
    let ki54 = 54.0 * MHZ;
    let ratio = ki54 / insertion_loss_to_coupling(14.0, ki54)?;
    Ok(outcome(
        "5",
        "transmission algebra",
        (il - 15.56).abs() <= 0.01 && (ratio - 8.0).abs() <= 0.1,
        format!("IL(kc = ki/10) = {il:.4} dB; 14 dB at ki = 54 MHz gives ki/kc = {ratio:.4}"),
    ))
}

pub fn check_hybridization() -> Result<CheckOutcome> {
    use rand::Rng;
    let (fm, fp, p) = reference::HYBRIDIZED;
    let bare = infer_coupling(fm * GHZ, fp * GHZ, p)?;
    let (d, g) = (bare.detuning() / MHZ, bare.g / MHZ);
    let mut pass = (d - 84.7).abs() <= 0.5 && (g - 59.5).abs() <= 0.5;

    let (lo, hi) = hybridize(bare.f_a0, bare.f_b0, bare.g)?;
    let p_lo = lo.participation("a").unwrap_or(f64::NAN);
    let direct = rel(lo.f, fm * GHZ).max(rel(hi.f, fp * GHZ)).max(rel(p_lo, p));
    pass &= direct <= 1e-9;

    let mut rng = child_rng(SEED, &[6]);
    let mut failures = 0;
    for _ in 0..ROUND_TRIPS {
        let fa = rng.random_range(1.0..20.0) * GHZ;
        let fb = rng.random_range(1.0..20.0) * GHZ;
        let g = rng.random_range(0.001..0.5) * GHZ;
        let (lo, hi) = hybridize(fa, fb, g)?;
        let pa = lo.participation("a").unwrap_or(f64::NAN);
        let ok = match infer_coupling(lo.f, hi.f, pa) {
            Ok(b) => rel(b.f_a0, fa) <= 1e-9 && rel(b.f_b0, fb) <= 1e-9 && rel(b.g, g) <= 1e-9,
            Err(_) => false,
        };
        failures += usize::from(!ok);
    }
    pass &= failures == 0;
    Ok(outcome(
        "6",
        "hybridization inverse problem",
        pass,
        format!(
            "detuning {d:.3} MHz, g {g:.3} MHz; forward residual {direct:.1e}; {failures}/{ROUND_TRIPS} round trips failed"
        ),
    ))
}

pub fn check_design() -> Result<CheckOutcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for a in &reference::ATTENUATORS {
        let rho = match a.material {
            "brass" => crate::design::BRASS_RESISTIVITY_RT,
            _ => crate::design::COPPER_RESISTIVITY_RT,
        };
        let f = a.f_rt_ghz * GHZ;
        let geom = AttenuatorGeometry::new(a.gap_um * 1e-6, reference::BRASS_LENGTH_MM * 1e-3)?;
        let q = q_estimate(&geom, skin_depth(rho, f)?, f)?.q_internal;
        let measured = a.f_rt_ghz * 1e3 / a.kappa_i_rt_mhz;
        let factor = (q / measured).max(measured / q);
        pass &= factor <= 3.0;
        parts.push(format!("{} {} um Q {:.1} vs {:.1}", a.material, a.gap_um, q, measured));
    }
    let cu = &reference::ATTENUATORS[1];
    let ratio = conductivity_ratio_from_linewidths(cu.kappa_i_rt_mhz * MHZ, cu.kappa_i_cold_mhz * MHZ)?;
    pass &= (ratio - 13.2).abs() <= 0.05;
    parts.push(format!("Cu-75 conductivity ratio {ratio:.3}"));
    Ok(outcome("7", "design estimates", pass, parts.join("; ")))
}

/// Points, repeats and range of the noise-injection round trip.
pub const INJECTION_POINTS: usize = 8;
pub const INJECTION_REPEATS: u32 = 10;
pub const INJECTION_MAX: f64 = 1e-2;

pub fn injection_grid() -> Vec<f64> {
    (0..INJECTION_POINTS)
        .map(|i| INJECTION_MAX * i as f64 / (INJECTION_POINTS - 1) as f64)
        .collect()
}

pub fn check_injection_round_trip() -> Result<CheckOutcome> {
    let cfg = reference::injection_config()?;
    let truth = cfg.thermal_occupation()?;
    let ds = simulate_noise_injection_sweep(&cfg, &injection_grid(), INJECTION_REPEATS, SEED)?;
    let opts = ExtractOptions {
        seed: SEED,
        ..ExtractOptions::default()
    };
    let ex = extract_nth(&ds, cfg.kappa(), cfg.transmon.chi, &opts)?;
    let z = ex.slope_z();
    let n = &ex.n_th;
    Ok(outcome(
        "8",
        "n_th extraction round trip",
        n.contains(truth) && z.abs() <= 2.0,
        format!(
            "n_th = {:.3e} (+{:.2e}/-{:.2e}), 95% CI [{:.3e}, {:.3e}] vs true {truth:.1e}; slope z = {z:.3}",
            n.estimate,
            n.plus(),
            n.minus(),
            n.ci_low,
            n.ci_high
        ),
    ))
}

pub fn check_coherence_algebra() -> Result<CheckOutcome> {
    let pd = pure_dephasing_from_times(100.0 * US, 171.0 * US)?;
    Ok(outcome(
        "9",
        "coherence algebra",
        (pd.ratio - 0.855).abs() <= 0.001 && (pd.ratio - 0.86).abs() <= 0.09,
        format!("T2e/2T1 = {:.4}", pd.ratio),
    ))
}

pub fn check_properties() -> Result<CheckOutcome> {
    let mut failed: Vec<&str> = Vec::new();

    let (k, c) = (8.0 * MHZ, 1.1 * MHZ);
    let linear = [1e-6, 1e-4, 1e-3, 3e-2].iter().all(|&n| {
        let g1 = thermal_dephasing_rate(n, k, c).unwrap_or(f64::NAN);
        let g2 = thermal_dephasing_rate(2.0 * n, k, c).unwrap_or(f64::NAN);
        rel(g2, 2.0 * g1) <= 1e-12
    });
    if !linear {
        failed.push("linearity");
    }

    // rising below κ = χ, falling above
    let chi = 1.3 * MHZ;
    let grid: Vec<f64> = (-40..=40).map(|i| chi * 10f64.powf(i as f64 / 20.0)).collect();
    let rates: Vec<f64> = grid.iter().map(|&kk| thermal_dephasing_rate(1e-3, kk, chi).unwrap_or(f64::NAN)).collect();
    let peak = rates
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let shape = rates[..=peak].windows(2).all(|w| w[1] > w[0]) && rates[peak..].windows(2).all(|w| w[1] < w[0]);
    if !(shape && peak == 40) {
        failed.push("maximum at kappa = chi");
    }

    let mut bounded = true;
    for t1_us in [20.0, 100.0, 300.0] {
        for n in [0.0, 1e-4, 1e-2] {
            for extra in [0.0, 100.0, 1e4] {
                let c = predict_coherence(t1_us * US, n, k, c, extra)?;
                bounded &= c.t2e.value <= 2.0 * c.t1.value;
            }
        }
    }
    if !bounded {
        failed.push("T2e <= 2T1");
    }

    let mut noisy = reference::injection_config()?;
    noisy.shots = Some(2000);
    let grid = [0.0, 2e-3, 5e-3];
    let a = simulate_noise_injection_sweep(&noisy, &grid, 3, SEED)?.to_csv_string()?;
    let b = simulate_noise_injection_sweep(&noisy, &grid, 3, SEED)?.to_csv_string()?;
    if a != b {
        failed.push("determinism");
    }

    let brass = reference::brass_config()?;
    let temps: Vec<f64> = (13..=120).step_by(1).map(|t| t as f64 * MK).collect();
    let ds = simulate_temperature_sweep(&brass, &temps, 1, SEED)?;
    if !ds.points.windows(2).all(|w| w[1].coherence.t2e.value <= w[0].coherence.t2e.value) {
        failed.push("T2e monotone in temperature");
    }

    let detail = if failed.is_empty() {
        "linearity, maximum at kappa = chi, T2e <= 2T1, determinism, temperature monotonicity".to_string()
    } else {
        format!("failed: {}", failed.join(", "))
    };
    Ok(outcome("10", "property suite", failed.is_empty(), detail))
}

/// Comparison of the dephasing time implied by the copper row's photon
/// bound with the nominal average T_φ. The two disagree by about a factor
/// of two; both are reported.
pub fn tphi_note() -> Result<String> {
    let row = &reference::READOUT_ROWS[3];
    let kappa = (row.kappa_i_mhz.unwrap_or(0.0) + row.kappa_c_mhz) * MHZ;
    let model = 1.0 / thermal_dephasing_rate(row.n_th_bound, kappa, row.chi_mhz * MHZ)?;
    let brass = tphi_from_ratio(102.0 * US, 0.98)?;
    Ok(format!(
        "note: Cu row bound n = {:.0e} implies T_phi = {:.2} ms; nominal average is {:.0} ms; brass ratio 0.98 at T1 = 102 us gives {:.1} ms",
        row.n_th_bound,
        model / MS,
        reference::NOMINAL_TPHI / MS,
        brass / MS
    ))
}

/// Runs one numbered check (1 to 10).
pub fn check(id: u32) -> Result<CheckOutcome> {
    match id {
        1 => check_dephasing_time(),
        2 => check_teff_bounds(),
        3 => check_bath_mixing(),
        4 => check_bose_einstein(),
        5 => check_transmission(),
        6 => check_hybridization(),
        7 => check_design(),
        8 => check_injection_round_trip(),
        9 => check_coherence_algebra(),
        10 => check_properties(),
        other => Err(Error::invalid(format!("no check numbered {other}"))),
    }
}

pub fn run(suite: Suite) -> Result<Vec<CheckOutcome>> {
    match suite {
        Suite::Table3 => Ok(vec![check_teff_bounds()?, check_report_bounds()?]),
        Suite::All => {
            let mut out: Vec<CheckOutcome> = (1..=10).map(check).collect::<Result<_>>()?;
            out.insert(2, check_report_bounds()?);
            Ok(out)
        }
    }
}
