//! Command-line surface for `mtp-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod record;
pub mod tables;

use clap::{Args, Parser, Subcommand};
use config::{FileConfig, Format, Profile, Settings};
use error::{CliError, CliResult};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "mtp", version, about = "Single-step multiple testing of weakly dependent Gaussian means")]
pub struct Cli {
    /// JSON file with default values for any flag (explicit flags win)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed (overrides MTP_SEED)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    #[arg(long, value_enum, global = true)]
    pub profile: Option<Profile>,

    /// Write to this file instead of stdout
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print cutoff values
    Cutoff(commands::cutoff::CutoffArgs),
    /// Estimate FWER, k-FWER or power for one configuration
    Simulate(commands::simulate::SimulateArgs),
    /// Reproduce the eight FWER tables
    Tables(tables::TablesArgs),
    /// Limiting error rates, rate bound, quantile expansion, power conditions
    Limits(commands::limits::LimitsArgs),
    /// Weak-dependence report for a model
    Diagnose(commands::diagnose::DiagnoseArgs),
}

/// Model selection shared by `simulate` and `diagnose`.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Number of hypotheses
    #[arg(long)]
    pub n: Option<u64>,
    /// product | independent | equicorrelated
    #[arg(long)]
    pub model: Option<String>,
    /// Loading of the first coordinate in the product schedule
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Decay exponent of the product schedule
    #[arg(long)]
    pub delta: Option<f64>,
    /// Common correlation for the equicorrelated model
    #[arg(long)]
    pub rho: Option<f64>,
    /// JSON model description; overrides the other model flags
    #[arg(long)]
    pub model_file: Option<PathBuf>,
}

pub fn settings(cli: &Cli) -> CliResult<Settings> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let env = std::env::var(config::SEED_ENV).ok();
    Ok(Settings {
        seed: config::resolve_seed(cli.seed, env.as_deref(), file.seed)?,
        format: cli.format.or(file.format).unwrap_or_default(),
        profile: cli.profile.or(file.profile).unwrap_or_default(),
        output: cli.output.clone(),
        file,
    })
}

pub(crate) fn open_output(settings: &Settings) -> CliResult<Box<dyn Write>> {
    Ok(match &settings.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(format!("creating {}", p.display()), e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let s = settings(cli)?;
    match &cli.command {
        Command::Cutoff(a) => commands::cutoff::run(a, &s),
        Command::Simulate(a) => commands::simulate::run(a, &s),
        Command::Tables(a) => tables::run(a, &s),
        Command::Limits(a) => commands::limits::run(a, &s),
        Command::Diagnose(a) => commands::diagnose::run(a, &s),
    }
}
