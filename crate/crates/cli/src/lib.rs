//! Command-line front end for the model-averaging experiments.
//!
//! Every subcommand reads one TOML config, writes CSV tables plus a
//! `manifest.json` into the output directory, and reports the invariant
//! checks it ran. Output files depend only on the config and the seed.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;
mod output;

use clap::{Parser, Subcommand};
use commands::{Check, Context, Outputs};
use config::parse;
pub use error::{CliError, CliResult};
use serde::de::DeserializeOwned;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable that overrides the output directory of a config.
pub const OUT_DIR_ENV: &str = "MODAVG_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "modavg-out";

#[derive(Debug, Parser)]
#[command(name = "modavg", version, about = "Exact laws and estimation experiments for two-model exponential-weight averaging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory; overrides the environment and the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the averaging estimator on given or simulated responses.
    Estimate,
    /// Evaluate a density on a grid.
    Density,
    /// Evaluate a CDF at points or on a grid.
    Cdf,
    /// Draw from one of the exact representations.
    Sample,
    /// L1 distance between the exact law and its limit along a sample-size ladder.
    L1Ladder,
    /// Oscillation of the limit CDF over gamma.
    Oscillation,
    /// Non-uniformity of the plug-in CDF estimator near the restricted model.
    Impossibility,
    /// Invariant suite of the shrink map.
    CheckTransform,
    /// Uniform tail probabilities of the scaled estimation error.
    ConsistencySweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Density => "density",
            Command::Cdf => "cdf",
            Command::Sample => "sample",
            Command::L1Ladder => "l1-ladder",
            Command::Oscillation => "oscillation",
            Command::Impossibility => "impossibility",
            Command::CheckTransform => "check-transform",
            Command::ConsistencySweep => "consistency-sweep",
        }
    }
}

/// Fields every config accepts.
trait Common {
    fn seed(&self) -> Option<u64>;
    fn out_dir(&self) -> Option<&Path>;
}

macro_rules! common {
    ($($t:ty),*) => {$(
        impl Common for $t {
            fn seed(&self) -> Option<u64> {
                self.seed
            }
            fn out_dir(&self) -> Option<&Path> {
                self.out_dir.as_deref()
            }
        }
    )*};
}
common!(
    config::EstimateConfig,
    config::DensityConfig,
    config::CdfConfig,
    config::SampleConfig,
    config::L1LadderConfig,
    config::OscillationConfig,
    config::ImpossibilityConfig,
    config::CheckTransformConfig,
    config::ConsistencySweepConfig
);

/// What a finished run wrote.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn failed_checks(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect()
    }
}

struct Prepared<T> {
    cfg: T,
    seed: u64,
    out_dir: PathBuf,
}

fn prepare<T: DeserializeOwned + Common>(cli: &Cli, text: &str, origin: &str, base: &Path) -> CliResult<Prepared<T>> {
    let cfg: T = parse(text, origin)?;
    let seed = cli.seed.or(cfg.seed()).unwrap_or(0);
    let out_dir = match (&cli.out, std::env::var_os(OUT_DIR_ENV), cfg.out_dir()) {
        (Some(p), _, _) => p.clone(),
        (None, Some(env), _) if !env.is_empty() => PathBuf::from(env),
        (None, _, Some(p)) if p.is_absolute() => p.to_path_buf(),
        (None, _, Some(p)) => base.join(p),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    };
    Ok(Prepared { cfg, seed, out_dir })
}

/// Runs one subcommand and writes its outputs. Failed checks are reported
/// in the returned [`RunReport`], not as an error.
pub fn run(cli: &Cli) -> CliResult<RunReport> {
    let started = Instant::now();
    if cli.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let (text, origin, base) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (text, path.display().to_string(), base)
        }
        None => (String::new(), "<empty config>".to_string(), PathBuf::from(".")),
    };
    let config_hash = format!("{:x}", Sha256::digest(text.as_bytes()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cli.workers.unwrap_or(0))))?;

    macro_rules! dispatch {
        ($t:ty, $f:path) => {{
            let p: Prepared<$t> = prepare(cli, &text, &origin, &base)?;
            let ctx = Context { base: &base, seed: p.seed };
            let outputs = pool.install(|| $f(&p.cfg, &ctx))?;
            (outputs, p.seed, p.out_dir)
        }};
    }
    let (outputs, seed, out_dir): (Outputs, u64, PathBuf) = match cli.command {
        Command::Estimate => dispatch!(config::EstimateConfig, commands::estimate),
        Command::Density => dispatch!(config::DensityConfig, commands::density),
        Command::Cdf => dispatch!(config::CdfConfig, commands::cdf_table),
        Command::Sample => dispatch!(config::SampleConfig, commands::sample),
        Command::L1Ladder => dispatch!(config::L1LadderConfig, commands::l1),
        Command::Oscillation => dispatch!(config::OscillationConfig, commands::oscillation_table),
        Command::Impossibility => dispatch!(config::ImpossibilityConfig, commands::impossibility),
        Command::CheckTransform => dispatch!(config::CheckTransformConfig, commands::check_transform),
        Command::ConsistencySweep => dispatch!(config::ConsistencySweepConfig, commands::sweep),
    };
    let header = output::Header { command: cli.command.name(), seed, config_sha256: &config_hash };
    let files = output::write_all(&out_dir, &header, outputs.tables, &outputs.checks, started)?;
    Ok(RunReport { out_dir, files, checks: outputs.checks })
}
