//! `gkdv`: batch front-end for the gkdv-core experiments.
//!
//! Exit status: 0 when every check passed, 1 when a check failed, 2 for
//! configuration errors, 3 when a numerical procedure failed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gkdv_core::par::{self, Execution};

use crate::commands::{Session, Verdict};
use crate::config::RunConfig;

/// Environment variable holding the default worker count.
const WORKERS_ENV: &str = "GKDV_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "gkdv", version, about = "Soliton stability experiments for generalized KdV")]
struct Cli {
    /// TOML configuration; every field is optional.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override one field, e.g. `--set stability.t_end=100`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Directory for data files.
    #[arg(long, default_value = "out", global = true)]
    out_dir: PathBuf,
    /// Worker threads for scans (default from GKDV_WORKERS, else all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Evaluate scans on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Closed-form identity battery for profiles and the linearized operator.
    Identities,
    /// Evans function along the imaginary axis.
    EvansScan,
    /// Normalised Jost solutions at one λ.
    Jost,
    /// Smoothing bound of the resolvent over τ.
    ResolventScan,
    /// Evolve a (perturbed) soliton.
    Evolve,
    /// Perturbed-soliton run with modulation and decay diagnostics.
    StabilityRun,
    /// Print the full default configuration.
    PrintDefaults,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::EvansScan => "evans-scan",
            Command::Jost => "jost",
            Command::ResolventScan => "resolvent-scan",
            Command::Evolve => "evolve",
            Command::StabilityRun => "stability-run",
            Command::PrintDefaults => "print-defaults",
        }
    }
}

fn workers(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("{WORKERS_ENV}={v} is not a worker count")),
        Err(_) => Ok(None),
    }
}

fn is_config_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<gkdv_core::Error>().is_some_and(gkdv_core::Error::is_config)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.command == Command::PrintDefaults {
        print!("{}", RunConfig::default().to_toml());
        return ExitCode::SUCCESS;
    }
    let config = match RunConfig::resolve(cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match workers(cli.workers) {
        Ok(Some(0)) | Err(_) => {
            eprintln!("configuration error: worker count must be a positive integer");
            return ExitCode::from(2);
        }
        Ok(Some(n)) => par::init_workers(n),
        Ok(None) => {}
    }
    let out_dir = match config::output_dir(&cli.out_dir) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let ctx = Session {
        config: &config,
        out_dir: &out_dir,
        exec: if cli.sequential { Execution::Sequential } else { Execution::Parallel },
        command: cli.command.name(),
    };
    let result = match cli.command {
        Command::Identities => commands::identities(&ctx),
        Command::EvansScan => commands::evans_scan(&ctx),
        Command::Jost => commands::jost(&ctx),
        Command::ResolventScan => commands::resolvent_scan(&ctx),
        Command::Evolve => commands::evolve(&ctx),
        Command::StabilityRun => commands::stability_run(&ctx),
        Command::PrintDefaults => unreachable!("handled above"),
    };
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) if is_config_error(&e) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(3)
        }
    }
}
