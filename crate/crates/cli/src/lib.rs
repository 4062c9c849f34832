//! `ktfr` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or runtime error, 2 usage error,
//! 3 exact/fast comparison above tolerance.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod spec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Tolerance(String),
    Library(ktfr::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) | CliError::Library(_) => EXIT_CONFIG,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Tolerance(m) => f.write_str(m),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

impl From<ktfr::Error> for CliError {
    fn from(e: ktfr::Error) -> Self {
        CliError::Library(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "ktfr", version, about = "Gaussian-kernel Wigner-Ville time-frequency transforms")]
pub struct Cli {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a transform and write it as CSV and/or PGM.
    Transform(TransformArgs),
    /// Compare the exact and fast paths; exit 3 above --tol.
    Compare(CompareArgs),
    /// Interference, logon-area and Lipschitz diagnostics.
    Diagnose(DiagnoseArgs),
    /// Time the smoothed pseudo-WVD over a sweep of base smoothings.
    Bench(BenchArgs),
    /// Train kernels and head on the synthetic chirp task.
    Train(TrainArgs),
    /// Print a preset's kernel table.
    Presets(PresetsArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct InputArgs {
    /// 16-bit PCM mono WAV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Synthetic signal, e.g. `tone:0.5pi` or `noise:seed=7`.
    #[arg(long)]
    pub spec: Option<String>,
    /// Length of a synthetic signal.
    #[arg(long)]
    pub len: Option<usize>,
    /// Keep real input real instead of converting it to its analytic signal.
    #[arg(long)]
    pub no_analytic: bool,
}

#[derive(Debug, Clone, Args, Default)]
pub struct HyperArgs {
    #[arg(long = "sigma-t")]
    pub sigma_t: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Number of octaves spanned by the scale law.
    #[arg(long = "S")]
    pub scale_max: Option<f64>,
    #[arg(long)]
    pub widen: Option<f64>,
    #[arg(long)]
    pub chirp: Option<f64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// Kernel grid CSV (overrides --preset).
    #[arg(long)]
    pub kernels: Option<PathBuf>,
    /// Number of output frequencies.
    #[arg(long)]
    pub freqs: Option<usize>,
    /// Output time step in samples.
    #[arg(long)]
    pub hop: Option<usize>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Clone, Args, Default)]
pub struct BaseArgs {
    #[arg(long = "base-sigma-t")]
    pub base_sigma_t: Option<f64>,
    #[arg(long = "base-sigma-f")]
    pub base_sigma_f: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub base: BaseArgs,
    /// auto, exact, fast or equivariant.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv, pgm or both.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub base: BaseArgs,
    /// Largest acceptable max relative error.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Second kernel grid CSV for the Lipschitz comparison.
    #[arg(long)]
    pub pair: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated base time spreads to sweep.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long = "base-sigma-f")]
    pub base_sigma_f: Option<f64>,
    /// Timing repeats per point; the minimum is reported.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Optional CSV of the timings.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    /// Total number of generated examples.
    #[arg(long = "n-total")]
    pub n_total: Option<usize>,
    #[arg(long = "n-train")]
    pub n_train: Option<usize>,
    /// Signal length.
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long)]
    pub freqs: Option<usize>,
    /// Initial preset.
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// numeric or analytic-head.
    #[arg(long)]
    pub mode: Option<String>,
    /// Relative finite-difference step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Directory for checkpoint.csv and loss_curve.csv.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PresetsArgs {
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub freqs: Option<usize>,
    #[arg(long)]
    pub times: Option<usize>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

/// Cap library parallelism from `KTFR_THREADS`.
fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("KTFR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("KTFR_THREADS must be a positive integer, got {v:?}")))?;
    // a pool already installed (e.g. by an earlier call in-process) is fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parse `argv` (including the program name), run, and return the exit code.
/// Output goes to stdout, diagnostics to stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut out = std::io::stdout().lock();
    match init_threads().and_then(|_| commands::run(&cli, &mut out)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
