use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nllc_cli::{run, ConfigError, ExperimentConfig, Pipeline, RunError};

#[derive(Parser)]
#[command(name = "nllc", about = "Lattice experiments for nonlocal liquid-crystal energies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the file's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to NLLC_WORKERS, then all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    KernelReport,
    PotentialReport,
    Minimize,
    EpsSweep,
    LimitSolve,
    GammaCheck,
    HolderProbe,
}

impl From<Command> for Pipeline {
    fn from(c: Command) -> Self {
        match c {
            Command::KernelReport => Pipeline::KernelReport,
            Command::PotentialReport => Pipeline::PotentialReport,
            Command::Minimize => Pipeline::Minimize,
            Command::EpsSweep => Pipeline::EpsSweep,
            Command::LimitSolve => Pipeline::LimitSolve,
            Command::GammaCheck => Pipeline::GammaCheck,
            Command::HolderProbe => Pipeline::HolderProbe,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let p = cli.config.as_ref().ok_or_else(|| ConfigError::new("config", "pass --config <file>"))?;
    let text = std::fs::read_to_string(p).map_err(|e| ConfigError::new("config", format!("{}: {e}", p.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    Ok(cfg)
}

fn workers(cli: &Cli) -> Result<Option<usize>, ConfigError> {
    if let Some(w) = cli.workers {
        return Ok(Some(w));
    }
    match std::env::var("NLLC_WORKERS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| ConfigError::new("NLLC_WORKERS", format!("`{s}` is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<Vec<PathBuf>, RunError> {
        if let Some(n) = workers(&cli)? {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| ConfigError::new("workers", e.to_string()))?;
        }
        let cfg = load(&cli)?;
        run(&cfg, cli.command.into())
    })();
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.tag());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
