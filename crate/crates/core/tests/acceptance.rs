//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each and exits non-zero if any fails.

use std::time::Instant;

use rand::Rng;

use cavatten_core::analysis::{extract_nth, ExtractOptions};
use cavatten_core::dephasing::{predict_coherence, pure_dephasing_from_times, thermal_dephasing_rate};
use cavatten_core::design::{
    conductivity_ratio_from_linewidths, q_estimate, skin_depth, AttenuatorGeometry, BRASS_RESISTIVITY_RT,
    COPPER_RESISTIVITY_RT,
};
use cavatten_core::experiment::{simulate_noise_injection_sweep, simulate_temperature_sweep, DeviceConfig};
use cavatten_core::modes::{hybridize, infer_coupling, insertion_loss_to_coupling, two_port_transmission};
use cavatten_core::reproduce::{self, reference, Suite};
use cavatten_core::seed::child_rng;
use cavatten_core::thermal::{bose_einstein_occupation, effective_temperature, mixed_bath_occupation, BathPort};
use cavatten_core::units::{GHZ, MHZ, MK, MS, US};
use cavatten_core::Result;

type Check = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Check);

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn c1_dephasing_time() -> Check {
    let t_phi = 1.0 / thermal_dephasing_rate(4e-3, 16.5 * MHZ, 1.5 * MHZ)?;
    // independent evaluation in angular units
    let (k, c) = (2.0 * std::f64::consts::PI * 16.5e6, 2.0 * std::f64::consts::PI * 1.5e6);
    let oracle = 1.0 / (4e-3 * k * c * c / (k * k + c * c));
    Ok((
        rel(t_phi, 0.3 * MS) <= 0.05 && rel(t_phi, oracle) <= 1e-12,
        format!("T_phi = {:.4} ms vs 0.3 ms (5%)", t_phi / MS),
    ))
}

fn c2_teff_bounds() -> Check {
    let rows = [(4e-3, 7.573, 65.0), (1e-3, 7.847, 55.0), (4e-4, 7.573, 46.0), (2e-4, 7.857, 44.0)];
    let mut ok = true;
    let mut got = Vec::new();
    for (n, f, want) in rows {
        let t = effective_temperature(f * GHZ, n)? / MK;
        ok &= (t - want).abs() <= 2.0;
        got.push(format!("{t:.2}"));
    }
    Ok((ok, format!("T_eff = [{}] mK vs [65, 55, 46, 44] (+-2 mK)", got.join(", "))))
}

fn c3_bath_mixing() -> Check {
    let mut ok = true;
    for (kappa, n_c) in [(1.0, 1.0), (1.9e6, 3.5e-3), (0.3e6, 7e-4), (12.5e6, 0.21)] {
        let n = mixed_bath_occupation(&[BathPort::new("i", 6.0 * kappa, 0.0)?, BathPort::new("c", kappa, n_c)?])?;
        ok &= n == n_c / 7.0;
    }
    Ok((ok, "6:1 internal/external gives exactly n_c/7".into()))
}

fn c4_bose_einstein() -> Check {
    let f = 7.5 * GHZ;
    let n = bose_einstein_occupation(f, 20.0 * MK)?;
    let mut worst: f64 = 0.0;
    for t_mk in [8.0, 13.0, 20.0, 25.0, 60.0, 120.0, 4000.0, 296_000.0] {
        let t = t_mk * MK;
        worst = worst.max(rel(effective_temperature(f, bose_einstein_occupation(f, t)?)?, t));
    }
    Ok((
        (0.5e-8..=5e-8).contains(&n) && worst <= 1e-10,
        format!("n(7.5 GHz, 20 mK) = {n:.4e}; round trip {worst:.1e}"),
    ))
}

fn c5_transmission() -> Check {
    let il = two_port_transmission(54.0, 5.4, 5.4)?.loss_db;
    let ki = 54.0 * MHZ;
    let ratio = ki / insertion_loss_to_coupling(14.0, ki)?;
    Ok((
        (il - 15.56).abs() <= 0.01 && (ratio - 8.0).abs() <= 0.1,
        format!("IL = {il:.4} dB; ki/kc = {ratio:.4} at 14 dB"),
    ))
}

fn c6_hybridization() -> Check {
    let b = infer_coupling(7.573 * GHZ, 7.719 * GHZ, 0.79)?;
    let (d, g) = (b.detuning() / MHZ, b.g / MHZ);
    let mut ok = (d - 84.7).abs() <= 0.5 && (g - 59.5).abs() <= 0.5;
    let (lo, hi) = hybridize(b.f_a0, b.f_b0, b.g)?;
    ok &= rel(lo.f, 7.573 * GHZ) <= 1e-9 && rel(hi.f, 7.719 * GHZ) <= 1e-9;
    ok &= rel(lo.participation("a").unwrap_or(f64::NAN), 0.79) <= 1e-9;

    let mut rng = child_rng(2024, &[]);
    let mut bad = 0;
    for _ in 0..1000 {
        let fa = rng.random_range(4.0..12.0) * GHZ;
        let fb = rng.random_range(4.0..12.0) * GHZ;
        let g = rng.random_range(1.0..300.0) * MHZ;
        let (lo, hi) = hybridize(fa, fb, g)?;
        let back = infer_coupling(lo.f, hi.f, lo.participation("a").unwrap_or(f64::NAN))?;
        let worst = rel(back.f_a0, fa).max(rel(back.f_b0, fb)).max(rel(back.g, g));
        bad += usize::from(worst.is_nan() || worst > 1e-9);
    }
    ok &= bad == 0;
    Ok((ok, format!("detuning {d:.3} MHz, g {g:.3} MHz; {bad}/1000 round trips off")))
}

fn c7_design() -> Check {
    let devices = [
        (BRASS_RESISTIVITY_RT, 300e-6, 7.52, 54.0),
        (COPPER_RESISTIVITY_RT, 75e-6, 7.68, 69.0),
        (COPPER_RESISTIVITY_RT, 125e-6, 7.68, 62.0),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (rho, gap, f_ghz, ki_mhz) in devices {
        let f = f_ghz * GHZ;
        let q = q_estimate(&AttenuatorGeometry::new(gap, 22e-3)?, skin_depth(rho, f)?, f)?.q_internal;
        let measured = f_ghz * 1e3 / ki_mhz;
        ok &= q / measured <= 3.0 && measured / q <= 3.0;
        parts.push(format!("{q:.1}/{measured:.1}"));
    }
    let ratio = conductivity_ratio_from_linewidths(69.0 * MHZ, 19.0 * MHZ)?;
    ok &= (ratio - 13.2).abs() < 0.05;
    Ok((ok, format!("Q est/meas {}; Cu-75 ratio {ratio:.3}", parts.join(", "))))
}

fn c8_injection() -> Check {
    let cfg = reference::injection_config()?;
    let truth = cfg.thermal_occupation()?;
    let n_add: Vec<f64> = (0..8).map(|i| 1e-2 * i as f64 / 7.0).collect();
    let ds = simulate_noise_injection_sweep(&cfg, &n_add, 10, 42)?;
    let ex = extract_nth(
        &ds,
        cfg.kappa(),
        cfg.transmon.chi,
        &ExtractOptions {
            seed: 42,
            n_bootstrap: 1000,
            ..ExtractOptions::default()
        },
    )?;
    let z = (ex.slope.estimate - ex.analytic_slope) / ex.slope.std_error;
    let n = ex.n_th;
    Ok((
        (truth - 2e-4).abs() < 1e-15 && n.ci_low <= truth && truth <= n.ci_high && z.abs() <= 2.0 && n.n_bootstrap == 1000,
        format!(
            "n_th = {:.3e} CI [{:.3e}, {:.3e}] ({} resamples), slope z = {z:.2}",
            n.estimate, n.ci_low, n.ci_high, n.n_bootstrap
        ),
    ))
}

fn c9_coherence() -> Check {
    let r = pure_dephasing_from_times(100.0 * US, 171.0 * US)?.ratio;
    Ok((
        (r - 0.855).abs() <= 0.001 && (r - 0.86).abs() <= 0.09,
        format!("T2e/2T1 = {r:.4}"),
    ))
}

fn brass() -> Result<DeviceConfig> {
    reference::brass_config()
}

fn c10_properties() -> Check {
    let mut failed = Vec::new();
    let (k, c) = (13.3 * MHZ, 1.2 * MHZ);
    let base = thermal_dephasing_rate(1e-4, k, c)?;
    for s in [0.0, 0.5, 3.0, 250.0] {
        if rel(thermal_dephasing_rate(1e-4 * s, k, c)? + 1e-300, base * s + 1e-300) > 1e-12 {
            failed.push("linear");
        }
    }
    for chi in [0.3 * MHZ, 1.1 * MHZ, 5.0 * MHZ] {
        let at = |kk: f64| thermal_dephasing_rate(1e-3, kk, chi);
        let (lo, mid, hi) = (at(chi * 0.999)?, at(chi)?, at(chi * 1.001)?);
        let (far_lo, far_hi) = (at(chi * 0.5)?, at(chi * 2.0)?);
        if !(lo < mid && hi < mid && far_lo < lo && far_hi < hi) {
            failed.push("max at kappa = chi");
        }
    }
    for t1 in [10.0 * US, 100.0 * US, 1.0 * MS] {
        for n in [0.0, 1e-5, 1e-2] {
            let p = predict_coherence(t1, n, k, c, 0.0)?;
            if p.t2e.value > 2.0 * t1 {
                failed.push("T2e <= 2T1");
            }
        }
    }
    let mut noisy = reference::injection_config()?;
    noisy.shots = Some(1000);
    let a = simulate_noise_injection_sweep(&noisy, &[0.0, 4e-3], 2, 7)?.to_csv_string()?;
    let b = simulate_noise_injection_sweep(&noisy, &[0.0, 4e-3], 2, 7)?.to_csv_string()?;
    if a != b {
        failed.push("determinism");
    }
    let temps: Vec<f64> = (0..=40).map(|i| (13.0 + 107.0 * i as f64 / 40.0) * MK).collect();
    let ds = simulate_temperature_sweep(&brass()?, &temps, 1, 7)?;
    if ds.points.windows(2).any(|w| w[1].coherence.t2e.value > w[0].coherence.t2e.value) {
        failed.push("T2e vs temperature");
    }
    failed.dedup();
    let detail = if failed.is_empty() { "all properties hold".to_string() } else { format!("failed: {}", failed.join(", ")) };
    Ok((failed.is_empty(), detail))
}

fn reproduce_suite() -> Check {
    let out = reproduce::run(Suite::All)?;
    let failed: Vec<String> = out.iter().filter(|o| !o.passed).map(|o| o.id.clone()).collect();
    Ok((failed.is_empty(), format!("{} checks, failed: [{}]", out.len(), failed.join(", "))))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 dephasing time", c1_dephasing_time),
        ("2 effective temperature bounds", c2_teff_bounds),
        ("3 bath mixing", c3_bath_mixing),
        ("4 Bose-Einstein occupation", c4_bose_einstein),
        ("5 transmission algebra", c5_transmission),
        ("6 hybridization inverse", c6_hybridization),
        ("7 design estimates", c7_design),
        ("8 n_th extraction round trip", c8_injection),
        ("9 coherence algebra", c9_coherence),
        ("10 property suite", c10_properties),
        ("reproduce --suite all", reproduce_suite),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!ok);
        println!(
            "{} criterion {name}: {detail} ({:.2} s)",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance check(s) failed");
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
