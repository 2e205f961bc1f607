use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use degen_ns_cli::commands::parse_levels;
use degen_ns_cli::output::read_state;
use degen_ns_cli::{cmd_converge, cmd_decay_fit, cmd_run, cmd_scenarios, parse_config, Failure, RunConfig};

/// Lagrangian solver for 1D compressible Navier-Stokes with density-dependent viscosity.
///
/// Relative output directories are created under $DEGEN_NS_OUTPUT_ROOT when set.
/// Exit status: 0 success, 2 configuration error, 3 solver failure.
#[derive(Parser)]
#[command(name = "degen-ns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its series, snapshots and summary.
    Run {
        config: PathBuf,
        /// Continue from a snapshot `.state` file instead of the configured initial data.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Run the configuration at several resolutions and report observed orders.
    Converge {
        config: PathBuf,
        #[arg(long, default_value = "51,101,201")]
        levels: String,
    },
    /// List the built-in presets.
    Scenarios,
    /// Fit exponential decay to the l2_dist column of a series file.
    DecayFit {
        series: PathBuf,
        #[arg(long)]
        t_start: f64,
    },
}

fn load(path: &PathBuf) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)?;
    parse_config(&text).map_err(|e| Failure::Config(anyhow::Error::new(e).context(path.display().to_string())))
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::Run { config, restart } => {
            let cfg = load(&config)?;
            let state = restart.map(|p| read_state(&p)).transpose().map_err(Failure::Config)?;
            cmd_run(&cfg, state)
        }
        Command::Converge { config, levels } => {
            let cfg = load(&config)?;
            cmd_converge(&cfg, &parse_levels(&levels)?)
        }
        Command::Scenarios => Ok(cmd_scenarios()),
        Command::DecayFit { series, t_start } => cmd_decay_fit(&series, t_start),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
