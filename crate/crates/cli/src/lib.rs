//! Command-line front end for scnsim: density sweeps, active-density fits and
//! Monte Carlo runs written as CSV.

pub mod commands;
pub mod config;
pub mod error;
mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Output;
pub use config::{Scenario, ScenarioConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "scnsim", version, about = "Coverage, ASE and energy sweeps for idle-mode small-cell networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Replaces the scenario seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Runs the simulation columns.
    #[arg(long, global = true, overrides_with = "no_sim")]
    pub sim: bool,
    /// Skips the simulation columns.
    #[arg(long, global = true, overrides_with = "sim")]
    pub no_sim: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coverage probability against BS density.
    CoverageSweep,
    /// Area spectral efficiency against BS density.
    AseSweep,
    /// Energy efficiency of every idle mode against BS density.
    EeSweep,
    /// Active BS density: bounds, approximation and simulation.
    ActiveDensity,
    /// Fits the active-density exponent.
    FitQstar {
        /// CSV with simulated active densities; simulates when absent.
        #[arg(long, value_name = "PATH")]
        table: Option<PathBuf>,
    },
    /// Monte Carlo run over the density grid.
    Simulate,
    /// Fits a node power profile to the reference efficiencies.
    CalibratePower {
        #[arg(long, default_value_t = 1000.0)]
        lambda: f64,
        #[arg(long, default_value_t = 300.0)]
        rho: f64,
        #[arg(long, default_value_t = 4.18)]
        q_star: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma0_db: f64,
        #[arg(long, default_value_t = 15.0)]
        eta0_db: f64,
        #[arg(long, default_value_t = 0.25)]
        amplifier_efficiency: f64,
    },
}

impl Cli {
    /// Loads the scenario and applies command-line overrides.
    pub fn scenario(&self) -> Result<Option<Scenario>, CliError> {
        let Some(path) = &self.config else {
            return Ok(None);
        };
        let mut cfg = ScenarioConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        if self.sim {
            cfg.sim.enabled = true;
        }
        if self.no_sim {
            cfg.sim.enabled = false;
        }
        cfg.resolve().map(Some)
    }
}

/// Runs the command and returns its output.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let scenario = cli.scenario()?;
    let need = || {
        scenario
            .as_ref()
            .ok_or_else(|| CliError::Usage("this command needs --config".into()))
    };
    match &cli.command {
        Command::CoverageSweep => commands::coverage_sweep(need()?),
        Command::AseSweep => commands::ase_sweep(need()?),
        Command::EeSweep => commands::ee_sweep(need()?),
        Command::ActiveDensity => commands::active_density(need()?),
        Command::FitQstar { table } => commands::fit_qstar(need()?, table.as_deref()),
        Command::Simulate => commands::simulate(need()?),
        Command::CalibratePower {
            lambda,
            rho,
            q_star,
            gamma0_db,
            eta0_db,
            amplifier_efficiency,
        } => commands::calibrate_power(
            scenario.as_ref(),
            &commands::CalibrationArgs {
                lambda: *lambda,
                rho: *rho,
                q_star: *q_star,
                gamma0_db: *gamma0_db,
                eta0_db: *eta0_db,
                amplifier_efficiency: *amplifier_efficiency,
            },
        ),
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, &out.text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .write_all(out.text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = execute(&cli).and_then(|out| {
        emit(&cli, &out)?;
        Ok(out.failures)
    });
    match result {
        Ok(failures) if failures.is_empty() => 0,
        Ok(failures) => {
            for f in &failures {
                eprintln!("error: {f}");
            }
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
