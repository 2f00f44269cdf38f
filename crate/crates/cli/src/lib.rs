//! Command-line front end: argument parsing, config resolution and dispatch.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod settings;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use dephase_core::RunConfig;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "dephase", version, about = "Spectral simulator for the kinetic Kuramoto model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML or JSON run configuration; the built-in reference run if absent.
    #[arg(long, global = true, env = "DEPHASE_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "DEPHASE_OUT")]
    pub out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true, env = "DEPHASE_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "DEPHASE_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the kinetic equation and write the order series and snapshots.
    Simulate,
    /// Construct the solution by Picard iteration.
    Picard,
    /// Run the finite-N particle oracle.
    Particles,
    /// Check estimates on a prior `simulate` output directory.
    Estimates {
        run_dir: PathBuf,
    },
    /// Independent runs over one parameter.
    Sweep {
        /// mu, epsilon, dt or k_max.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Picard => "picard",
            Self::Particles => "particles",
            Self::Estimates { .. } => "estimates",
            Self::Sweep { .. } => "sweep",
        }
    }
}

/// Config file (or reference), then `DEPHASE_*` overrides, then flags.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => settings::load_config(path)?,
        None => RunConfig::reference(),
    };
    settings::apply_env(&mut config, std::env::vars())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Command::Estimates { run_dir } = &cli.command {
        let out = cli.out.clone().unwrap_or_else(|| run_dir.join("estimates"));
        commands::estimates(run_dir, &out)?;
        return Ok(());
    }
    let config = resolve_config(cli)?;
    let out = commands::output_dir(cli.out.as_deref(), &config, cli.command.name());
    match &cli.command {
        Command::Simulate => commands::simulate(&config, &out)?,
        Command::Picard => commands::picard(&config, &out)?,
        Command::Particles => commands::particles(&config, &out)?,
        Command::Sweep { param, values } => {
            let values: Vec<String> = values.iter().map(|v| v.trim().to_owned()).filter(|v| !v.is_empty()).collect();
            commands::sweep(&config, param, &values, &out)?
        }
        Command::Estimates { .. } => unreachable!("handled above"),
    };
    Ok(())
}
