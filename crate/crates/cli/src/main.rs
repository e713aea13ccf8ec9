//! Experiment runner for collective-spin Otto cycle studies.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical failure.

mod output;
mod params;
mod presets;
mod sweep;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::output::RunOutput;
use crate::params::Overrides;
use crate::presets::{Preset, PRESET_NAMES};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl From<spinotto::Error> for CliError {
    fn from(e: spinotto::Error) -> Self {
        use spinotto::Error::*;
        match e {
            IntegratorFailure(_) | NotThermalized { .. } | LimitCycleNotConverged { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

/// Simulation experiments for finite-time quantum Otto cycles with a
/// collective spin working fluid.
#[derive(Parser)]
#[command(name = "spinotto", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Scalar overrides; defaults come from the preset, then the config file.
#[derive(Args, Debug, Default)]
struct FlagOverrides {
    /// Spin magnitude j (N = 2j qubits)
    #[arg(long)]
    j: Option<f64>,
    /// Coupling at the cold end of the ramp
    #[arg(long)]
    lambda_i: Option<f64>,
    /// Coupling at the hot end of the ramp
    #[arg(long)]
    lambda_f: Option<f64>,
    /// Cold bath temperature (units of omega)
    #[arg(long)]
    t_c: Option<f64>,
    /// Hot bath temperature (units of omega)
    #[arg(long)]
    t_h: Option<f64>,
    /// Dissipation rate
    #[arg(long)]
    gamma: Option<f64>,
    /// Energy scale
    #[arg(long)]
    omega: Option<f64>,
    /// Thermal stroke duration (omit for perfect thermalization)
    #[arg(long)]
    t_th: Option<f64>,
    /// Unitary stroke duration (0 = sudden quench)
    #[arg(long)]
    t_u: Option<f64>,
    /// Peak drive interaction Gamma_bar
    #[arg(long)]
    gamma_bar: Option<f64>,
    /// Bath coupling: collective-coherent or independent-incoherent
    #[arg(long)]
    mode: Option<String>,
    /// Full-thermalization fidelity tolerance
    #[arg(long)]
    thermalization_tol: Option<f64>,
    /// Limit-cycle fidelity tolerance
    #[arg(long)]
    limit_cycle_tol: Option<f64>,
    /// Midpoint-exponential steps per unitary stroke
    #[arg(long)]
    unitary_steps: Option<usize>,
}

impl FlagOverrides {
    fn into_overrides(self) -> Overrides {
        Overrides {
            j: self.j,
            lambda_i: self.lambda_i,
            lambda_f: self.lambda_f,
            t_c: self.t_c,
            t_h: self.t_h,
            gamma: self.gamma,
            omega: self.omega,
            t_th: self.t_th,
            t_u: self.t_u,
            gamma_bar: self.gamma_bar,
            mode: self.mode,
            thermalization_tol: self.thermalization_tol,
            limit_cycle_tol: self.limit_cycle_tol,
            unitary_steps: self.unitary_steps,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one preset with its defaults plus any overrides
    Run {
        /// Preset name (see `list-presets`)
        preset: String,
        #[command(flatten)]
        flags: FlagOverrides,
        /// Output directory (created if missing)
        #[arg(long)]
        out: PathBuf,
        /// TOML config file with default overrides
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a preset over a parameter grid (JSON {"param": [values...]})
    Sweep {
        preset: String,
        #[command(flatten)]
        flags: FlagOverrides,
        /// Grid file
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Concurrent sweep workers (default: all cores)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List the available presets
    ListPresets,
}

fn resolve_overrides(
    config: Option<&PathBuf>,
    flags: FlagOverrides,
) -> Result<Overrides, CliError> {
    let mut overrides = Overrides::default();
    if let Some(path) = config {
        overrides = Overrides::from_config_file(path)?;
    }
    Ok(Overrides::layered(overrides, &flags.into_overrides()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            preset,
            flags,
            out,
            config,
        } => {
            // Validate everything before touching the filesystem.
            let preset = Preset::parse(&preset)?;
            let overrides = resolve_overrides(config.as_ref(), flags)?;
            let resolved = preset.resolve(&overrides);
            resolved.cycle_config(false)?;
            let mut output = RunOutput::create(&out)?;
            preset.execute(&resolved, &overrides, &mut output)?;
            let manifest = output.finalize_manifest("run", preset.name(), &resolved.echo())?;
            eprintln!("wrote {}", manifest.display());
            Ok(())
        }
        Command::Sweep {
            preset,
            flags,
            grid,
            out,
            config,
            workers,
        } => {
            let preset = Preset::parse(&preset)?;
            let overrides = resolve_overrides(config.as_ref(), flags)?;
            let grid = sweep::parse_grid(&grid)?;
            sweep::run_sweep(preset, &overrides, &grid, &out, workers)?;
            eprintln!("wrote {}", out.join("manifest.txt").display());
            Ok(())
        }
        Command::ListPresets => {
            for (name, _, description) in PRESET_NAMES {
                println!("{name:24} {description}");
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
