//! Command-line front end for `lattice-kpp`: configuration, command dispatch
//! and CSV output.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod commands;
mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use thiserror::Error;

use lattice_kpp::Error as ModelError;

pub use commands::run_command;
pub use config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "kebab-case")]
pub enum Command {
    Speed,
    OptimalBeta,
    Sweep,
    Simulate,
    KernelVerify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Speed => "speed",
            Self::OptimalBeta => "optimal-beta",
            Self::Sweep => "sweep",
            Self::Simulate => "simulate",
            Self::KernelVerify => "kernel-verify",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lattice-kpp", version, about = "Spreading speeds on a 2-periodic patchy lattice")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Parse(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 ok, 1 numerical failure, 2 parse, 3 regime, 4 contamination.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse(_) => 2,
            Self::Regime(_) => 3,
            Self::Failed(_) | Self::Io { .. } => 1,
            Self::Model(e) => match e {
                ModelError::InvalidParameter { .. }
                | ModelError::InvalidTolerance(_)
                | ModelError::InvalidWindow { .. }
                | ModelError::SupportOutsideWindow { .. }
                | ModelError::StepDoesNotDivideDelay { .. }
                | ModelError::EmptyGrid => 2,
                ModelError::NonInvadable { .. }
                | ModelError::NoPositiveEquilibrium { .. }
                | ModelError::BetaOutOfRange { .. }
                | ModelError::NonKpp { .. } => 3,
                ModelError::BoundaryContamination { .. } => 4,
                _ => 1,
            },
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Sizes the global thread pool from `LATTICE_KPP_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LATTICE_KPP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Parse(format!("LATTICE_KPP_THREADS must be a positive integer, got {raw:?}")))?;
    // a pool that is already set up (e.g. by a test harness) is left alone
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Reads the configuration, runs the command and writes its artefacts.
pub fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    configure_threads()?;
    let text = std::fs::read_to_string(&cli.config).map_err(|e| CliError::io(&cli.config, e))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    run_command(cli.command, cfg)
}
