//! `homog-mcf`: forced graphical mean curvature flow in a periodic medium,
//! its cell problems and effective equation, and homogenization-rate
//! experiments, driven by a configuration file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use homog_mcf::config::RunConfig;
use homog_mcf::runner::{self, Ctx};
use homog_mcf::CliResult;

#[derive(Parser)]
#[command(
    name = "homog-mcf",
    version,
    about = "Forced graphical mean curvature flow: cell problems, effective equations, and homogenization-rate experiments"
)]
struct Cli {
    /// Configuration file (key = value sections); built-in defaults if absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for per-sample and per-epsilon parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Output directory (overrides config and HOMOG_MCF_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Patch one config entry, repeatable: --override section.key=value
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Verify the coercivity condition and print the margin.
    Check,
    /// Integrate the unit-cell flow and export snapshots plus monitors.
    Evolve,
    /// Solve the cell problem at one slope and report the effective value.
    Cell,
    /// Tabulate the effective Hamiltonian over a slope grid.
    Table,
    /// Solve the effective first-order equation from a table.
    Effective,
    /// Run the homogenization-rate sweep and emit a report.
    Rate,
    /// Run the expanding-cone optimality example and emit a report.
    Cone,
    /// Run the a priori monitor suite.
    Monitors,
}

fn load(cli: &Cli) -> CliResult<Ctx> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| homog_mcf::CliError::Io(format!("{}: {e}", path.display())))?,
        None => RunConfig::default().to_text(),
    };
    let origin = cli
        .config
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "<defaults>".to_string());
    let patched = RunConfig::apply_overrides(&text, &cli.overrides)?;
    let config = RunConfig::from_text(&patched, &origin)?;

    // Precedence: --out flag, then the config file, then HOMOG_MCF_OUT.
    let out_dir = cli
        .out
        .clone()
        .or_else(|| {
            if config.directory != RunConfig::default().directory {
                Some(PathBuf::from(&config.directory))
            } else {
                None
            }
        })
        .or_else(|| std::env::var_os("HOMOG_MCF_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&config.directory));

    Ok(Ctx { config, out_dir, jobs: cli.jobs.max(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match load(&cli) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("homog-mcf: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cmd = match cli.command {
        Command::Check => runner::Subcommand::Check,
        Command::Evolve => runner::Subcommand::Evolve,
        Command::Cell => runner::Subcommand::Cell,
        Command::Table => runner::Subcommand::Table,
        Command::Effective => runner::Subcommand::Effective,
        Command::Rate => runner::Subcommand::Rate,
        Command::Cone => runner::Subcommand::Cone,
        Command::Monitors => runner::Subcommand::Monitors,
    };
    match runner::run(cmd, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("homog-mcf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
