//! `cohortsim`: fit cohort generators, generate cohorts, run cost scenarios
//! and analyze the results. Each subcommand is driven by one JSON config.

mod commands;
mod error;
mod io;

use clap::{Parser, Subcommand};
use error::{CliError, CliResult};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "cohortsim", version, about = "Virtual cohort generation and scenario simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config driving the command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for runs and replicates (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Fit a cohort generator to a CSV dataset.
    Fit,
    /// Sample a virtual cohort from a fitted generator.
    Generate,
    /// Run the generic-substitution cost scenario.
    Simulate,
    /// Compare cohorts and replicate association p-values.
    Analyze,
    /// Write synthetic example inputs.
    Synth,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Generate => "generate",
            Command::Simulate => "simulate",
            Command::Analyze => "analyze",
            Command::Synth => "synth",
        }
    }
}

/// Settings shared by every command.
pub struct Context {
    pub base: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

impl Context {
    /// The run's master seed. There is no wall-clock fallback.
    pub fn seed(&self, from_config: Option<u64>) -> CliResult<u64> {
        self.seed
            .or(from_config)
            .ok_or_else(|| CliError::Config("`seed` is required (set it in the config or pass --seed)".into()))
    }

    /// `--out`, else the config's `out_dir`, else the config's directory.
    pub fn out_dir(&self, from_config: Option<&Path>) -> PathBuf {
        match (&self.out, from_config) {
            (Some(o), _) => o.clone(),
            (None, Some(p)) => io::resolve(&self.base, p),
            (None, None) => self.base.clone(),
        }
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        io::resolve(&self.base, p)
    }
}

fn execute(cli: &Cli) -> CliResult<Value> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    }
    let config = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let ctx = Context {
        base: io::base_dir(config),
        seed: cli.seed,
        out: cli.out.clone(),
    };
    match cli.command {
        Command::Fit => commands::fit::run(&io::read_config(config)?, &ctx),
        Command::Generate => commands::generate::run(&io::read_config(config)?, &ctx),
        Command::Simulate => commands::simulate::run(&io::read_config(config)?, &ctx),
        Command::Analyze => commands::analyze::run(&io::read_config(config)?, &ctx),
        Command::Synth => commands::synth::run(&io::read_config(config)?, &ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COHORTSIM_LOG", "warn")).init();
    let cli = Cli::parse();
    let command = cli.command.name();
    match execute(&cli) {
        Ok(mut summary) => {
            summary["command"] = json!(command);
            summary["status"] = json!("ok");
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {e}");
            println!("{}", json!({"command": command, "status": "error", "exit_code": code, "error": e.to_string()}));
            ExitCode::from(code as u8)
        }
    }
}
