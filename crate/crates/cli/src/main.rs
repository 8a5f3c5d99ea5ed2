//! `cavatten`: photon-noise budgets, attenuator estimates, synthetic sweeps
//! and coherence analysis from the command line.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure,
//! 3 failed reproduction check.

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cavatten_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cavatten", version, about = "Thermal-photon dephasing and cavity attenuator toolkit")]
pub struct Cli {
    /// Print results as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Master seed for stochastic commands.
    #[arg(long, global = true, env = "CAVATTEN_SEED")]
    pub seed: Option<u64>,

    /// Directory for output files and the run manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bose-Einstein occupation, effective temperature, bath mixing, attenuation chains.
    #[command(subcommand)]
    Thermal(ThermalCmd),
    /// Skin depth, Q and frequency estimates, requirements check.
    #[command(subcommand)]
    Design(DesignCmd),
    /// Two-mode hybridization, forward and inverse.
    #[command(subcommand)]
    Hybridize(HybridizeCmd),
    /// Synthetic decay traces and sweeps.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Exponential trace fits and n_th extraction.
    #[command(subcommand)]
    Fit(FitCmd),
    /// Coherence summary table with photon-number and temperature bounds.
    Report(ReportArgs),
    /// Re-derive the reference numbers and report pass/fail.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Subcommand)]
pub enum ThermalCmd {
    /// Mean photon number of a mode in equilibrium.
    Occupation {
        #[arg(long)]
        f_ghz: f64,
        #[arg(long)]
        t_mk: f64,
    },
    /// Temperature whose Bose-Einstein occupation equals n.
    Temperature {
        #[arg(long)]
        f_ghz: f64,
        #[arg(long)]
        n: f64,
    },
    /// Rate-weighted occupation of several baths.
    Mix {
        /// Bath as label:rate_mhz:occupation; repeat for each port.
        #[arg(long = "port", required = true)]
        ports: Vec<String>,
    },
    /// Occupation delivered by a chain of attenuators.
    Chain {
        #[arg(long)]
        f_ghz: f64,
        #[arg(long, default_value_t = 300.0)]
        source_k: f64,
        /// Element as attenuation_db:temperature_k, ordered from the source.
        #[arg(long = "element")]
        elements: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Material {
    Copper,
    Brass,
}

#[derive(Debug, Args)]
pub struct ConductorArgs {
    /// Room-temperature handbook resistivity.
    #[arg(long, conflicts_with = "rho")]
    pub material: Option<Material>,
    /// Resistivity in ohm m.
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum DesignCmd {
    /// Classical skin depth.
    Skin {
        #[command(flatten)]
        conductor: ConductorArgs,
        #[arg(long)]
        f_ghz: f64,
    },
    /// Internal Q from gap over skin depth (order of magnitude).
    Q {
        #[command(flatten)]
        conductor: ConductorArgs,
        #[arg(long)]
        f_ghz: f64,
        #[arg(long)]
        gap_um: f64,
        #[arg(long, default_value_t = 1.0)]
        geometry_factor: f64,
    },
    /// Half-wave frequency of a cavity and its value after contraction.
    Frequency {
        #[arg(long)]
        length_mm: f64,
        #[arg(long, default_value_t = 1.0)]
        correction: f64,
        /// Fractional length contraction on cooldown.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Conductivity ratio implied by warm and cold linewidths.
    Conductivity {
        #[arg(long)]
        kappa_rt_mhz: f64,
        #[arg(long)]
        kappa_cold_mhz: f64,
    },
    /// Check an attenuator against centering, attenuation and bandwidth windows.
    Check {
        #[arg(long)]
        f_ghz: f64,
        #[arg(long)]
        kappa_i_mhz: f64,
        #[arg(long)]
        kappa_c1_mhz: f64,
        #[arg(long)]
        kappa_c2_mhz: f64,
        #[arg(long)]
        target_ghz: f64,
        #[arg(long, default_value_t = 25.0)]
        tolerance_mhz: f64,
        /// Compare the total linewidth, not the internal rate, with the bandwidth window.
        #[arg(long)]
        total_linewidth: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum HybridizeCmd {
    /// Dressed modes from bare frequencies and coupling.
    Forward {
        #[arg(long)]
        fa_ghz: f64,
        #[arg(long)]
        fb_ghz: f64,
        #[arg(long)]
        g_mhz: f64,
        /// Internal rate of cavity a, for participation-weighted linewidths.
        #[arg(long)]
        kappa_a_mhz: Option<f64>,
        #[arg(long)]
        kappa_b_mhz: Option<f64>,
    },
    /// Bare frequencies and coupling from dressed modes and a participation.
    Inverse {
        #[arg(long)]
        f_minus_ghz: f64,
        #[arg(long)]
        f_plus_ghz: f64,
        /// Participation of the lower mode in cavity a.
        #[arg(long)]
        p: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    T1,
    Ramsey,
    Echo,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    /// One decay trace (CSV: time_us,population,sigma).
    Trace {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        rate_per_s: f64,
        #[arg(long)]
        t_max_us: f64,
        #[arg(long, default_value_t = 51)]
        points: usize,
        /// Shots per point; omit for the noiseless limit.
        #[arg(long)]
        shots: Option<u32>,
    },
    /// Coherence versus injected photon number.
    Injection {
        #[arg(long)]
        config: PathBuf,
        /// Explicit n_add values, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["n_max", "points"])]
        n_add: Vec<f64>,
        /// Evenly spaced n_add from 0 to this value.
        #[arg(long)]
        n_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value_t = 10)]
        repeats: u32,
    },
    /// Coherence versus sample temperature.
    Temperature {
        #[arg(long)]
        config: PathBuf,
        /// Temperatures in mK, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        t_mk: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        repeats: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum FitCmd {
    /// Fit baseline + amplitude exp(-rate t) to a trace CSV.
    Trace {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "t1")]
        kind: KindArg,
    },
    /// Residual photon number from a noise-injection sweep CSV.
    Nth {
        #[arg(long)]
        input: PathBuf,
        /// Device config providing the readout linewidth and chi.
        #[arg(long, required_unless_present_all = ["kappa_mhz", "chi_mhz"])]
        config: Option<PathBuf>,
        /// Total readout linewidth.
        #[arg(long, conflicts_with = "config")]
        kappa_mhz: Option<f64>,
        #[arg(long, conflicts_with = "config")]
        chi_mhz: Option<f64>,
        #[arg(long, default_value_t = cavatten_core::analysis::DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        #[arg(long, default_value_t = cavatten_core::analysis::DEFAULT_COVERAGE)]
        coverage: f64,
        /// Multiplies every n_add value before fitting.
        #[arg(long, default_value_t = 1.0)]
        n_add_scale: f64,
        /// Fix the slope to the dephasing formula and subtract this known offset (1/s).
        #[arg(long)]
        analytic_offset_per_s: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON list of {label, config, t1_us, t1_err_us, t2e_us, t2e_err_us}.
    #[arg(long, required_unless_present = "reference")]
    pub input: Option<PathBuf>,
    /// Report the built-in reference setups.
    #[arg(long, conflicts_with = "input")]
    pub reference: bool,
    /// Print CSV instead of an aligned table.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, default_value = "all")]
    pub suite: String,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence(_) | Error::Indeterminate(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are invalid input; help and version are not errors
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let outcome = match commands::run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let printed = if cli.json {
        serde_json::to_string_pretty(&outcome.json).map(|s| s + "\n").map_err(std::io::Error::from)
    } else {
        Ok(outcome.text.clone())
    }
    .and_then(|s| std::io::stdout().lock().write_all(s.as_bytes()));
    match printed {
        Ok(()) => {}
        // a closed pipe (e.g. `| head`) is not an error
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if let Some(dir) = &cli.out {
        let argv: Vec<String> = std::env::args().collect();
        match output::emit_files(dir, &outcome, argv, cli.seed) {
            Ok(paths) => log::info!("wrote {} files to {}", paths.len(), dir.display()),
            Err(e) => {
                eprintln!("error: writing outputs: {e}");
                return ExitCode::from(1);
            }
        }
    }
    if outcome.failed {
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
