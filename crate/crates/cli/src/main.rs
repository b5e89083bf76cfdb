//! `lgas`: batch driver for the lattice gas experiments.
//!
//! Every subcommand reads one TOML config, writes its artifacts to the
//! output directory and exits with 0 (all checks pass), 2 (a check failed),
//! 3 (invalid config) or 1 (runtime failure, outputs removed).

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::RunConfig;
use output::{Artifacts, Meta};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(String),
}

impl From<lgas_core::Error> for CliError {
    fn from(e: lgas_core::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "lgas", version, about = "Lattice gas fluctuation experiments")]
struct Cli {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Brackets, transport coefficients and the compressibility matrix.
    Coefficients,
    /// Microscopic trajectory with conservation checks.
    Simulate,
    /// Product-measure covariance of Fourier fluctuations.
    StaticCov,
    /// Symbol dump: Euler symbol, projected diffusion and noise factor.
    #[command(alias = "symbols")]
    Project,
    /// Per-mode Ornstein-Uhlenbeck ensemble against closed-form covariances.
    OuSim,
    /// Exact generator identities on the toy suite.
    Oracles,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Coefficients => "coefficients",
            Command::Simulate => "simulate",
            Command::StaticCov => "static-cov",
            Command::Project => "project",
            Command::OuSim => "ou-sim",
            Command::Oracles => "oracles",
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let cfg = RunConfig::load(path, cli.seed)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let mut out = Artifacts::open(&dir, Meta::new(cli.command.name(), &cfg))?;
    let result = match cli.command {
        Command::Coefficients => commands::coefficients(&cfg, &mut out),
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::StaticCov => commands::static_cov(&cfg, &mut out),
        Command::Project => commands::project(&cfg, &mut out),
        Command::OuSim => commands::ou_sim(&cfg, &mut out),
        Command::Oracles => commands::oracles(&cfg, &mut out),
    };
    if result.is_err() {
        out.discard();
    }
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("lgas {}: acceptance check failed (see summary.json)", cli.command.name());
            ExitCode::from(2)
        }
        Err(CliError::Config(m)) => {
            eprintln!("lgas: config error: {m}");
            ExitCode::from(3)
        }
        Err(CliError::Run(m)) => {
            eprintln!("lgas: {m}");
            ExitCode::from(1)
        }
    }
}
