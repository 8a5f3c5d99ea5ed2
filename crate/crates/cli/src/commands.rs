//! Subcommand implementations. Unit conversion from the command-line units
//! (GHz, MHz, µs, mK) to SI happens here and nowhere else in the binary.

use std::fs;
use std::path::Path;

use cavatten_core::analysis::{
    coherence_report, extract_nth, fit_exponential, render_csv, render_json, render_text, ExtractOptions, SlopeMode,
};
use cavatten_core::config::{from_json_str, parse_device_config, DeviceConfigFile};
use cavatten_core::dephasing::{CoherenceSet, Measured};
use cavatten_core::design::{
    check_requirements, conductivity_ratio_from_linewidths, contracted_frequency, halfwave_frequency, q_estimate,
    skin_depth, AttenuatorGeometry, BandwidthBasis, Requirements, BRASS_RESISTIVITY_RT, COPPER_RESISTIVITY_RT,
};
use cavatten_core::experiment::{
    linear_times, simulate_noise_injection_sweep, simulate_temperature_sweep, simulate_trace, DeviceConfig, Shots,
    SweepDataset, Trace, TraceKind,
};
use cavatten_core::modes::{hybridize, infer_coupling, ResonatorSpec};
use cavatten_core::reproduce::{self, reference, Suite};
use cavatten_core::thermal::{
    attenuation_chain_occupation, bose_einstein_occupation, effective_temperature, mixed_bath_occupation, BathPort,
    ChainElement, ThermalEnvironment,
};
use cavatten_core::units::{GHZ, MHZ, MK, MM, UM, US};
use cavatten_core::{Error, Result};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::output::{Outcome, Record};
use crate::{Cli, Command, ConductorArgs, DesignCmd, FitCmd, HybridizeCmd, KindArg, Material, SimulateCmd, ThermalCmd};

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Thermal(c) => thermal(c),
        Command::Design(c) => design(c),
        Command::Hybridize(c) => hybridize_cmd(c),
        Command::Simulate(c) => simulate(c, cli.seed),
        Command::Fit(c) => fit(c, cli.seed),
        Command::Report(a) => report(a.input.as_deref(), a.csv),
        Command::Reproduce(a) => reproduce_cmd(&a.suite),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn split_fields<const N: usize>(s: &str, what: &str) -> Result<[String; N]> {
    let parts: Vec<String> = s.split(':').map(str::to_string).collect();
    parts
        .try_into()
        .map_err(|_| invalid(format!("`{s}`: expected {what}")))
}

fn parse_num(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| invalid(format!("{what}: cannot parse `{s}` as a number")))
}

fn thermal(cmd: &ThermalCmd) -> Result<Outcome> {
    let r = match cmd {
        ThermalCmd::Occupation { f_ghz, t_mk } => {
            let n = bose_einstein_occupation(f_ghz * GHZ, t_mk * MK)?;
            Record::new().num("f", *f_ghz, "GHz").num("temperature", *t_mk, "mK").num("n_bar", n, "")
        }
        ThermalCmd::Temperature { f_ghz, n } => {
            let t = effective_temperature(f_ghz * GHZ, *n)?;
            Record::new().num("f", *f_ghz, "GHz").num("n_bar", *n, "").num("t_eff", t / MK, "mK")
        }
        ThermalCmd::Mix { ports } => {
            let ports = ports
                .iter()
                .map(|p| {
                    let [label, rate, occ] = split_fields::<3>(p, "label:rate_mhz:occupation")?;
                    BathPort::new(label, parse_num(&rate, "rate")? * MHZ, parse_num(&occ, "occupation")?)
                })
                .collect::<Result<Vec<_>>>()?;
            let n = mixed_bath_occupation(&ports)?;
            let total: f64 = ports.iter().map(|p| p.rate).sum();
            Record::new().num("total_rate", total / MHZ, "MHz").num("n_bar", n, "")
        }
        ThermalCmd::Chain { f_ghz, source_k, elements } => {
            let chain = elements
                .iter()
                .map(|e| {
                    let [db, t] = split_fields::<2>(e, "attenuation_db:temperature_k")?;
                    ChainElement::new(parse_num(&db, "attenuation")?, parse_num(&t, "temperature")?)
                })
                .collect::<Result<Vec<_>>>()?;
            let total_db: f64 = chain.iter().map(|c| c.attenuation_db).sum();
            // the chain alone; ports do not enter the propagation
            let env = ThermalEnvironment {
                ports: Vec::new(),
                chain,
                source_temperature: *source_k,
            };
            let n = attenuation_chain_occupation(&env, f_ghz * GHZ)?;
            let mut r = Record::new().num("total_attenuation", total_db, "dB").num("n_bar", n, "");
            if n > 0.0 {
                r = r.num("t_eff", effective_temperature(f_ghz * GHZ, n)? / MK, "mK");
            }
            r
        }
    };
    Ok(Outcome::record(r))
}

fn resistivity(c: &ConductorArgs) -> Result<f64> {
    match (c.material, c.rho) {
        (_, Some(rho)) => Ok(rho),
        (Some(Material::Copper), None) => Ok(COPPER_RESISTIVITY_RT),
        (Some(Material::Brass), None) => Ok(BRASS_RESISTIVITY_RT),
        (None, None) => Err(invalid("give --material or --rho")),
    }
}

fn design(cmd: &DesignCmd) -> Result<Outcome> {
    let r = match cmd {
        DesignCmd::Skin { conductor, f_ghz } => {
            let d = skin_depth(resistivity(conductor)?, f_ghz * GHZ)?;
            Record::new().num("skin_depth", d / UM, "um")
        }
        DesignCmd::Q {
            conductor,
            f_ghz,
            gap_um,
            geometry_factor,
        } => {
            let f = f_ghz * GHZ;
            let d = skin_depth(resistivity(conductor)?, f)?;
            // length does not enter the Q estimate; any positive value passes validation
            let geom = AttenuatorGeometry::new(gap_um * UM, 1.0)?.with_geometry_factor(*geometry_factor)?;
            let q = q_estimate(&geom, d, f)?;
            Record::new()
                .num("skin_depth", d / UM, "um")
                .num("q_internal", q.q_internal, "")
                .num("kappa_i", q.kappa_i / MHZ, "MHz")
        }
        DesignCmd::Frequency {
            length_mm,
            correction,
            epsilon,
        } => {
            let geom = AttenuatorGeometry::new(*length_mm * MM, *length_mm * MM)?.with_length_correction(*correction)?;
            let f_rt = halfwave_frequency(&geom)?;
            let f_cold = contracted_frequency(f_rt, *epsilon)?;
            Record::new().num("f_rt", f_rt / GHZ, "GHz").num("f_cold", f_cold / GHZ, "GHz")
        }
        DesignCmd::Conductivity {
            kappa_rt_mhz,
            kappa_cold_mhz,
        } => Record::new().num(
            "conductivity_ratio",
            conductivity_ratio_from_linewidths(kappa_rt_mhz * MHZ, kappa_cold_mhz * MHZ)?,
            "",
        ),
        DesignCmd::Check {
            f_ghz,
            kappa_i_mhz,
            kappa_c1_mhz,
            kappa_c2_mhz,
            target_ghz,
            tolerance_mhz,
            total_linewidth,
        } => {
            let spec = ResonatorSpec::new(f_ghz * GHZ, kappa_i_mhz * MHZ, kappa_c1_mhz * MHZ, kappa_c2_mhz * MHZ)?;
            let req = Requirements {
                centering_tolerance: tolerance_mhz * MHZ,
                bandwidth_basis: if *total_linewidth {
                    BandwidthBasis::TotalLinewidth
                } else {
                    BandwidthBasis::InternalRate
                },
                ..Requirements::default()
            };
            let rep = check_requirements(&spec, target_ghz * GHZ, &req)?;
            Record::new()
                .num("detuning", rep.detuning / MHZ, "MHz")
                .num("insertion_loss", rep.insertion_loss_db, "dB")
                .num("linewidth", rep.linewidth / MHZ, "MHz")
                .num("bandwidth_checked", rep.bandwidth_checked / MHZ, "MHz")
                .flag("centered", rep.centered)
                .flag("attenuation_ok", rep.attenuation_ok)
                .flag("bandwidth_ok", rep.bandwidth_ok)
                .flag("all_pass", rep.all_pass())
        }
    };
    Ok(Outcome::record(r))
}

fn hybridize_cmd(cmd: &HybridizeCmd) -> Result<Outcome> {
    let r = match cmd {
        HybridizeCmd::Forward {
            fa_ghz,
            fb_ghz,
            g_mhz,
            kappa_a_mhz,
            kappa_b_mhz,
        } => {
            let (mut lo, mut hi) = hybridize(fa_ghz * GHZ, fb_ghz * GHZ, g_mhz * MHZ)?;
            let rates = match (kappa_a_mhz, kappa_b_mhz) {
                (Some(a), Some(b)) => Some([("a", a * MHZ), ("b", b * MHZ)]),
                (None, None) => None,
                _ => return Err(invalid("give both --kappa-a-mhz and --kappa-b-mhz, or neither")),
            };
            if let Some(rates) = rates {
                let none = [("a", 0.0), ("b", 0.0)];
                lo = lo.with_rates(&rates, &none)?;
                hi = hi.with_rates(&rates, &none)?;
            }
            let pa = |m: &cavatten_core::modes::HybridizedMode| m.participation("a").unwrap_or(f64::NAN);
            let mut r = Record::new()
                .num("f_minus", lo.f / GHZ, "GHz")
                .num("f_plus", hi.f / GHZ, "GHz")
                .num("p_minus_a", pa(&lo), "")
                .num("p_plus_a", pa(&hi), "");
            if rates.is_some() {
                r = r
                    .num("kappa_minus", lo.kappa_i_eff / MHZ, "MHz")
                    .num("kappa_plus", hi.kappa_i_eff / MHZ, "MHz");
            }
            r
        }
        HybridizeCmd::Inverse {
            f_minus_ghz,
            f_plus_ghz,
            p,
        } => {
            let b = infer_coupling(f_minus_ghz * GHZ, f_plus_ghz * GHZ, *p)?;
            Record::new()
                .num("f_a0", b.f_a0 / GHZ, "GHz")
                .num("f_b0", b.f_b0 / GHZ, "GHz")
                .num("detuning", b.detuning() / MHZ, "MHz")
                .num("g", b.g / MHZ, "MHz")
        }
    };
    Ok(Outcome::record(r))
}

fn trace_kind(k: KindArg) -> TraceKind {
    match k {
        KindArg::T1 => TraceKind::T1,
        KindArg::Ramsey => TraceKind::Ramsey,
        KindArg::Echo => TraceKind::Echo,
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| invalid("this command is stochastic and needs a seed: pass --seed or set CAVATTEN_SEED"))
}

fn load_device(path: &Path) -> Result<(DeviceConfigFile, DeviceConfig)> {
    parse_device_config(&read(path)?)
}

fn trace_csv(t: &Trace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["time_us", "population", "sigma"])?;
    for ((time, p), s) in t.times.iter().zip(&t.populations).zip(&t.sigmas) {
        w.write_record([(time / US).to_string(), p.to_string(), s.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| invalid(e.to_string()))
}

fn read_trace(path: &Path, kind: TraceKind) -> Result<Trace> {
    let text = read(path)?;
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| invalid(format!("{}: missing column `{name}`", path.display())))
    };
    let (ct, cp, cs) = (col("time_us")?, col("population")?, col("sigma")?);
    let (mut times, mut populations, mut sigmas) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec?;
        let field = |i: usize, name: &str| parse_num(rec.get(i).unwrap_or(""), name);
        times.push(field(ct, "time_us")? * US);
        populations.push(field(cp, "population")?);
        sigmas.push(field(cs, "sigma")?);
    }
    Ok(Trace {
        times,
        populations,
        sigmas,
        kind,
    })
}

fn sweep_outcome(ds: &SweepDataset, file: DeviceConfigFile) -> Result<Outcome> {
    for w in &ds.warnings {
        log::warn!("{w}");
    }
    let csv = ds.to_csv_string()?;
    let sidecar = serde_json::to_string_pretty(&ds.sidecar())? + "\n";
    let points: Vec<Value> = ds
        .points
        .iter()
        .map(|p| {
            let c = &p.coherence;
            let fin = |x: f64| if x.is_finite() { json!(x / US) } else { Value::Null };
            json!({
                "value": p.value,
                "t1_us": fin(c.t1.value),
                "t1_err": fin(c.t1.sigma),
                "t2e_us": fin(c.t2e.value),
                "t2e_err": fin(c.t2e.sigma),
                "tphi_us": fin(c.t_phi.value),
            })
        })
        .collect();
    Ok(Outcome {
        text: csv.clone(),
        json: json!({
            "axis": ds.axis.as_str(),
            "seed": ds.seed,
            "repeats": ds.repeats,
            "warnings": ds.warnings,
            "points": points,
        }),
        files: vec![("sweep.csv".into(), csv), ("sweep.json".into(), sidecar)],
        config: Some(serde_json::to_value(file)?),
        failed: false,
    })
}

fn simulate(cmd: &SimulateCmd, seed: Option<u64>) -> Result<Outcome> {
    let seed = require_seed(seed)?;
    match cmd {
        SimulateCmd::Trace {
            kind,
            rate_per_s,
            t_max_us,
            points,
            shots,
        } => {
            let times = linear_times(t_max_us * US, *points);
            let t = simulate_trace(trace_kind(*kind), *rate_per_s, &times, Shots::from_option(*shots), seed)?;
            let csv = trace_csv(&t)?;
            Ok(Outcome {
                text: csv.clone(),
                json: json!({
                    "kind": t.kind,
                    "time_us": t.times.iter().map(|x| x / US).collect::<Vec<_>>(),
                    "population": t.populations,
                    "sigma": t.sigmas,
                }),
                files: vec![("trace.csv".into(), csv)],
                ..Outcome::default()
            })
        }
        SimulateCmd::Injection {
            config,
            n_add,
            n_max,
            points,
            repeats,
        } => {
            let (file, cfg) = load_device(config)?;
            let grid = match (n_add.is_empty(), n_max, points) {
                (false, _, _) => n_add.clone(),
                (true, Some(max), Some(n)) if *n >= 2 => (0..*n).map(|i| max * i as f64 / (*n - 1) as f64).collect(),
                _ => return Err(invalid("give --n-add, or --n-max with --points >= 2")),
            };
            let ds = simulate_noise_injection_sweep(&cfg, &grid, *repeats, seed)?;
            sweep_outcome(&ds, file)
        }
        SimulateCmd::Temperature { config, t_mk, repeats } => {
            let (file, cfg) = load_device(config)?;
            let temps: Vec<f64> = t_mk.iter().map(|t| t * MK).collect();
            let ds = simulate_temperature_sweep(&cfg, &temps, *repeats, seed)?;
            sweep_outcome(&ds, file)
        }
    }
}

fn fit(cmd: &FitCmd, seed: Option<u64>) -> Result<Outcome> {
    match cmd {
        FitCmd::Trace { input, kind } => {
            let trace = read_trace(input, trace_kind(*kind))?;
            let f = fit_exponential(&trace)?;
            let (tau, tau_err) = f.decay_time();
            let r = Record::new()
                .num("rate", f.rate.estimate, "1/s")
                .num("rate_err", f.rate.std_error, "1/s")
                .num("rate_ci_low", f.rate.ci_low, "1/s")
                .num("rate_ci_high", f.rate.ci_high, "1/s")
                .num("decay_time", tau / US, "us")
                .num("decay_time_err", tau_err / US, "us")
                .num("amplitude", f.amplitude.estimate, "")
                .num("baseline", f.baseline.estimate, "")
                .num("chi_squared", f.chi_squared, "")
                .text("solver", format!("{:?}", f.solver).to_lowercase());
            Ok(Outcome::record(r))
        }
        FitCmd::Nth {
            input,
            config,
            kappa_mhz,
            chi_mhz,
            bootstrap,
            coverage,
            n_add_scale,
            analytic_offset_per_s,
        } => {
            let ds = SweepDataset::from_csv_str(&read(input)?)?;
            let (kappa, chi, file) = match (config, kappa_mhz, chi_mhz) {
                (Some(p), _, _) => {
                    let (file, cfg) = load_device(p)?;
                    (cfg.kappa(), cfg.transmon.chi, Some(file))
                }
                (None, Some(k), Some(c)) => (k * MHZ, c * MHZ, None),
                _ => return Err(invalid("give --config, or both --kappa-mhz and --chi-mhz")),
            };
            // the bootstrap is the only random step
            let seed = if *bootstrap > 0 { require_seed(seed)? } else { seed.unwrap_or(0) };
            let opts = ExtractOptions {
                n_add_scale: *n_add_scale,
                coverage: *coverage,
                n_bootstrap: *bootstrap,
                seed,
                mode: analytic_offset_per_s.map_or(SlopeMode::Fitted, |offset| SlopeMode::Analytic { offset }),
            };
            let ex = extract_nth(&ds, kappa, chi, &opts)?;
            let n = ex.n_th;
            let r = Record::new()
                .num("n_th", n.estimate, "")
                .num("n_th_err", n.std_error, "")
                .num("n_th_ci_low", n.ci_low, "")
                .num("n_th_ci_high", n.ci_high, "")
                .num("coverage", n.coverage, "")
                .num("slope", ex.slope.estimate, "1/s")
                .num("slope_err", ex.slope.std_error, "1/s")
                .num("analytic_slope", ex.analytic_slope, "1/s")
                .num("slope_z", ex.slope_z(), "")
                .num("points", ex.n_points as f64, "")
                .num("bootstrap", n.n_bootstrap as f64, "")
                .num("valid_resamples", ex.n_valid_resamples as f64, "")
                .num("seed", seed as f64, "");
            let mut o = Outcome::record(r);
            o.config = file.map(serde_json::to_value).transpose()?;
            Ok(o)
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportInput {
    label: String,
    config: DeviceConfigFile,
    t1_us: f64,
    #[serde(default)]
    t1_err_us: f64,
    t2e_us: f64,
    #[serde(default)]
    t2e_err_us: f64,
}

fn report_rows(text: &str) -> Result<Vec<(String, DeviceConfig, CoherenceSet)>> {
    let inputs: Vec<ReportInput> = from_json_str(text)?;
    inputs
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let cfg = r.config.to_device().map_err(|e| match e {
                Error::Config { path, message } => Error::Config {
                    path: format!("[{i}].config.{path}"),
                    message,
                },
                other => other,
            })?;
            let coh = CoherenceSet::new(
                Measured::new(r.t1_us * US, r.t1_err_us * US),
                Measured::new(r.t2e_us * US, r.t2e_err_us * US),
                None,
            )
            .map_err(|e| Error::Config {
                path: format!("[{i}]"),
                message: e.to_string(),
            })?;
            Ok((r.label, cfg, coh))
        })
        .collect()
}

fn report(input: Option<&Path>, csv: bool) -> Result<Outcome> {
    let (rows, note) = match input {
        Some(p) => (report_rows(&read(p)?)?, None),
        None => (reference::table_rows()?, Some(reproduce::tphi_note()?)),
    };
    let rows = coherence_report(&rows)?;
    let mut text = if csv { render_csv(&rows)? } else { render_text(&rows) };
    if let (Some(n), false) = (&note, csv) {
        text.push_str(&format!("\n{n}\n"));
    }
    Ok(Outcome {
        text,
        json: json!({ "rows": render_json(&rows), "note": note }),
        files: vec![("report.csv".into(), render_csv(&rows)?)],
        ..Outcome::default()
    })
}

fn reproduce_cmd(suite: &str) -> Result<Outcome> {
    let suite: Suite = suite.parse()?;
    let out = reproduce::run(suite)?;
    let failed = out.iter().any(|o| !o.passed);
    let mut text: String = out.iter().map(|o| format!("{o}\n")).collect();
    let n_pass = out.iter().filter(|o| o.passed).count();
    text.push_str(&format!("{n_pass}/{} checks passed\n", out.len()));
    Ok(Outcome {
        text,
        json: serde_json::to_value(&out)?,
        failed,
        ..Outcome::default()
    })
}
