//! Config-driven runner for the georabi engine: builds models from a JSON
//! document or a preset, runs the requested scheme and writes CSV tables.

pub mod config;
pub mod error;
pub mod run;
pub mod table;

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{config_hash, parse_config, parse_sweep, preset, ExperimentConfig, Mode};
use error::CliError;
use run::Outcome;

pub const UNITS: &str = "units: hbar = 1, 2m = 1; delta wells: lengths in zeta = 1/gamma_left, energies global with E_u = gamma_r^2 - beta^2 noted where used; times in 1/energy";

#[derive(Debug, Parser)]
#[command(name = "georabi", version, about = "Geometrical Rabi transitions: spectra, evolutions, rotation sweeps")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration: fig2 or lambda-circle.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output file prefix; tables go to PREFIX_<table>.csv.
    #[arg(long, global = true, value_name = "PREFIX")]
    pub out: Option<String>,
    /// Number of path traversals.
    #[arg(long, global = true, value_name = "N")]
    pub cycles: Option<usize>,
    /// Run even when the adiabaticity flag is violated.
    #[arg(long, global = true)]
    pub force: bool,
    /// Add a generation timestamp to the CSV headers.
    #[arg(long, global = true)]
    pub stamp: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Full,
    Rwa,
    Geometric,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound-state table.
    #[command(long_about = "Bound-state table.\n\n\
        PREFIX_spectrum.csv, delta wells: index, energy, energy_eu, decay, label, interior, weight_left, weight_right, weight_central.\n\
        Other models: index, energy, role (eigenvalues at the path start).")]
    Spectrum,
    /// Time series of the full, rotating-frame and geometric schemes.
    #[command(long_about = "Time series of the full, rotating-frame and geometric schemes.\n\n\
        PREFIX_adiabaticity.csv: t, omega, nonadiabatic, offresonance.\n\
        PREFIX_kappa_timeseries.csv: t, kappa_re, kappa_im, kappa_abs (one cycle).\n\
        PREFIX_populations_full.csv: t, p_0..p_{N-1}, p0_rot, p2_rot.\n\
        PREFIX_populations_rwa.csv: t, p0, p2.\n\
        PREFIX_populations_geometric.csv: t, cycles, p0, p2, gamma_accumulated.\n\
        PREFIX_gamma_per_cycle.csv: cycle, gamma_per_cycle, gamma_accumulated, p2_closed_form, p2_geometric, p2_full, p2_rwa.\n\
        Schemes not run leave their columns as nan.")]
    Evolve {
        /// Schemes to run; overrides run.mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Rotation angle per cycle over a parameter grid.
    #[command(long_about = "Rotation angle per cycle over a parameter grid.\n\n\
        --sweep takes axes `name=v1,v2,...` or `name=lo:hi:n` separated by `;`; names: scale, lambda_r, lambda_c, radius, omega, amplitude.\n\
        Without --sweep the config's sweep section is used, or the single configured point.\n\
        PREFIX_gamma_sweep.csv: index, <axis columns>, gamma_per_cycle, realness_residual, nonadiabatic_max, offresonance_max, flag, error.\n\
        Rows follow grid order (last axis fastest); failed points keep their row with flag `error`.\n\
        GEORABI_THREADS caps the number of concurrently evaluated points.")]
    Gamma {
        #[arg(long, value_name = "SPEC")]
        sweep: Option<String>,
    },
    /// Λ system: closed form against simulation.
    #[command(long_about = "Λ system: closed form against simulation.\n\n\
        PREFIX_adiabaticity.csv as for evolve.\n\
        PREFIX_lambda_comparison.csv: cycle, gamma_analytic, gamma_line, gamma_rel_diff, a_e_closed_form, a_e_geometric, a_e_full.")]
    Lambda,
    /// Adiabaticity report only.
    #[command(long_about = "Adiabaticity report only.\n\n\
        PREFIX_adiabaticity.csv: t, omega, nonadiabatic, offresonance; maxima and flags in the header.")]
    Check,
}

/// Configuration after applying the command-line overrides.
pub fn load(common: &Common, command: &Command) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            parse_config(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(CliError::Config("either --config or --preset is required".into())),
    };
    if let Some(out) = &common.out {
        cfg.output.prefix = out.clone();
    }
    if let Some(n) = common.cycles {
        cfg.run.cycles = n;
    }
    match command {
        Command::Evolve { mode: Some(m) } => {
            cfg.run.mode = match m {
                ModeArg::Full => Mode::Full,
                ModeArg::Rwa => Mode::Rwa,
                ModeArg::Geometric => Mode::Geometric,
                ModeArg::All => Mode::All,
            }
        }
        Command::Gamma { sweep: Some(s) } => cfg.sweep = Some(parse_sweep(s)?),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn provenance(cfg: &ExperimentConfig, stamp: bool) -> Vec<String> {
    let mut p = vec![
        format!("georabi {}", env!("CARGO_PKG_VERSION")),
        format!("config_sha256: {}", config_hash(cfg)),
        UNITS.to_string(),
    ];
    if stamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        p.push(format!("generated_unix: {secs}"));
    }
    p
}

/// Runs a parsed command line; returns the written files.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load(&cli.common, &cli.command)?;
    let force = cli.common.force;
    let outcome: Outcome = match &cli.command {
        Command::Spectrum => run::spectrum(&cfg)?,
        Command::Evolve { .. } => run::evolve(&cfg, force)?,
        Command::Gamma { .. } => {
            let threads = run::thread_cap()?;
            let axes = cfg.sweep.clone().unwrap_or_default();
            run::gamma(&cfg, &axes, threads)?
        }
        Command::Lambda => run::lambda(&cfg, force)?,
        Command::Check => run::check(&cfg)?,
    };
    let prov = provenance(&cfg, cli.common.stamp);
    let mut written = Vec::new();
    for t in &outcome.tables {
        written.push(t.write(&cfg.output.prefix, &prov)?);
    }
    match outcome.violation {
        Some(v) if !force => Err(CliError::Violated(v)),
        _ => Ok(written),
    }
}
