//! Command-line driver for `cavity-scatter`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 I/O error.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::Config;
pub use error::{CliError, CliResult};
pub use output::Format;

/// Environment variable capping the worker count (0 = automatic).
pub const THREADS_ENV: &str = "CAVITY_SCATTER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cavity-scatter", version, about = "Antenna-coupled rectangular cavity: resonances and spacing statistics")]
pub struct Cli {
    /// JSON configuration file; missing keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Output directory. Table commands print to stdout without it.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Only log errors.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    #[value(name = "GHz")]
    Ghz,
    #[value(name = "per_m")]
    PerM,
    #[value(name = "per_m2")]
    PerM2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dirichlet eigenvalues of the configured rectangle.
    Modes {
        /// Number of modes to list.
        #[arg(long, default_value_t = 50, conflicts_with = "e_max")]
        count: usize,
        /// List every mode up to this energy (1/m^2) instead.
        #[arg(long)]
        e_max: Option<f64>,
    },
    /// Tabulate xi and Z on a real k grid or on the imaginary axis.
    Xi {
        #[arg(long, default_value_t = 1.0)]
        k_min: f64,
        #[arg(long, default_value_t = 100.0)]
        k_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Use k = i kappa with kappa on the grid.
        #[arg(long)]
        imaginary: bool,
        /// Add the image-sum value (imaginary axis only).
        #[arg(long, requires = "imaginary")]
        oracle: bool,
    },
    /// Tabulate the reflection amplitude on a real k grid.
    Reflect {
        #[arg(long, default_value_t = 1.0)]
        k_min: f64,
        #[arg(long, default_value_t = 100.0)]
        k_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Point-junction versus tube amplitudes on a log grid of ka.
    Amplitudes {
        #[arg(long, default_value_t = 1e-4)]
        ka_min: f64,
        #[arg(long, default_value_t = 1.0)]
        ka_max: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
        /// Partial-wave order of the tube columns.
        #[arg(long, default_value_t = 0)]
        order: u32,
    },
    /// Complex resonances of the configured cavity up to f_max.
    Resonances,
    /// Full ensemble run: resonances, spacings, histogram, manifest.
    Ensemble,
    /// Compare a run's spacings with the exponential law or a reference.
    Compare {
        /// `poisson`, or a levels/spacings/histogram file.
        #[arg(long, default_value = "poisson")]
        against: String,
        /// Run directory holding spacings and histogram.
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
    },
    /// Validate external levels and convert them to 1/m^2.
    Ingest {
        path: PathBuf,
        #[arg(long, value_enum)]
        unit: Unit,
    },
}

fn init_logging(quiet: bool) {
    let level = if quiet { "error" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Worker count from [`THREADS_ENV`].
pub fn threads_from_env() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v:?} is not a non-negative integer"))),
        Err(_) => Ok(0),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    init_logging(cli.quiet);
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    commands::dispatch(&cli, &config)
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
