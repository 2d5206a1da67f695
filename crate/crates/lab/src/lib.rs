//! Command-line front end for `wva-core`.
//!
//! `wva-lab <command> [flags]` runs one computation and prints a JSON
//! envelope (default) or CSV. Every number comes from a library call; this
//! crate only handles flags and output formatting.
//!
//! Exit codes: 0 on success, 1 when postselection fails (zero overlap or
//! zero success probability), 2 on configuration and usage errors.

pub mod commands;
pub mod config;
pub mod format;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::config::{Cli, Format, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NULL_POSTSELECTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Sets the size of the sweep thread pool.
pub const THREADS_ENV: &str = "WVA_LAB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] wva_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(
                wva_core::Error::NullPostselection { .. }
                | wva_core::Error::UndefinedWeakValue { .. },
            ) => EXIT_NULL_POSTSELECTION,
            _ => EXIT_CONFIG,
        }
    }
}

/// Merges the config file (if any) with the flags; flags win.
pub fn resolve_config(cli: Cli) -> Result<RunConfig, LabError> {
    let file = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let mut flags = cli.command.map(|c| c.into_config()).unwrap_or_default();
    flags.format = cli.format;
    flags.output = cli.output;
    Ok(file.overlay(flags))
}

fn thread_pool() -> Result<rayon::ThreadPool, LabError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            LabError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))
}

/// Runs a fully merged configuration and writes the result.
pub fn execute(cfg: &RunConfig) -> Result<(), LabError> {
    let pool = thread_pool()?;
    let report = pool.install(|| commands::run_command(cfg))?;
    let text = match cfg.format.unwrap_or_default() {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv(),
    };
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match resolve_config(cli).and_then(|cfg| execute(&cfg)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
