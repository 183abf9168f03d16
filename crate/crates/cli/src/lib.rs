//! Seeded experiment runner over the `regglab` toolkit.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod report;

pub use report::ExperimentReport;

#[derive(Parser, Debug, Clone)]
#[command(name = "regglab", version, about = "Exact and Monte Carlo experiments on random regular graphs")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Base seed for every random stream.
    #[arg(long, global = true, env = "REGGLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Stream index under the base seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub stream: u64,
    /// Worker threads for trial loops.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write a CSV table here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Largest n for exhaustive enumeration of regular graphs or subgraphs.
    #[arg(long, global = true, default_value_t = 12)]
    pub max_enum: usize,
    /// Largest n for n! permutation sweeps.
    #[arg(long, global = true, default_value_t = 9)]
    pub max_perm: usize,
    /// `key = value` file presetting any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Count h-regular spanning subgraphs and compare with the estimates.
    Count(CountArgs),
    /// Moments of |R_d1| over uniform (d1+d2)-regular graphs and the sprinkling coupling.
    Conjectures(ConjecturesArgs),
    /// Common edges between an h-regular graph and a random relabelling.
    Overlap(OverlapArgs),
    /// log det Q of sampled regular graphs against the band.
    Spectra(SpectraArgs),
    /// Gaussian moments of u and v, and the enumeration estimate.
    Moments(MomentsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CountArgs {
    /// Host is K_n.
    #[arg(long, conflicts_with_all = ["graph", "n"])]
    pub complete: Option<usize>,
    /// Host from an edge-list file.
    #[arg(long, conflicts_with = "n")]
    pub graph: Option<PathBuf>,
    /// Host is a random d-regular graph on n vertices.
    #[arg(long, requires = "d")]
    pub n: Option<usize>,
    #[arg(long, requires = "n")]
    pub d: Option<usize>,
    /// Degree of the counted subgraphs.
    #[arg(long)]
    pub h: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Args, Debug, Clone)]
pub struct ConjecturesArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d1: usize,
    #[arg(long)]
    pub d2: usize,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Skip the coupling when there are more (d1+d2)-regular graphs than this.
    #[arg(long, default_value_t = 2000)]
    pub max_coupling_s: usize,
}

#[derive(Args, Debug, Clone)]
pub struct OverlapArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub h: usize,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Comma-separated alphas for the tail bound; `e` is Euler's number.
    #[arg(long, default_value = "e,4,6")]
    pub alpha: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerChoice {
    /// Pairing model when practical, swap chain otherwise.
    Auto,
    /// Double-edge-swap chain from the circulant start.
    Switching,
    /// Swap walk confined to the codegree window (quasirandom regime only).
    Window,
}

#[derive(Args, Debug, Clone)]
pub struct SpectraArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// `dense:ALPHA` or `quasirandom:EPS`.
    #[arg(long)]
    pub regime: String,
    #[arg(long, value_enum, default_value_t = SamplerChoice::Auto)]
    pub sampler: SamplerChoice,
    /// Swap steps per sample for the switching sampler (default 100 n d).
    #[arg(long)]
    pub steps: Option<u64>,
    /// Accepted swaps between window-walk samples.
    #[arg(long, default_value_t = 200)]
    pub thin: u64,
}

#[derive(Args, Debug, Clone)]
pub struct MomentsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub h: usize,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 100_000)]
    pub mc_trials: usize,
}

/// Failure modes, each with its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or input files: status 2.
    Usage(String),
    /// A resource guard tripped: status 3.
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Guard(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Guard(m) => write!(f, "guard: {m}"),
        }
    }
}

impl From<regglab::Error> for CliError {
    fn from(e: regglab::Error) -> Self {
        use regglab::Error::*;
        match e {
            TooLarge(_) | RejectionBudgetExceeded(_) => CliError::Guard(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Runs one parsed command and returns its report.
pub fn run(cli: &Cli) -> Result<ExperimentReport, CliError> {
    let start = std::time::Instant::now();
    let mut report = match &cli.command {
        Command::Count(a) => commands::cmd_count(&cli.common, a),
        Command::Conjectures(a) => commands::cmd_conjectures(&cli.common, a),
        Command::Overlap(a) => commands::cmd_overlap(&cli.common, a),
        Command::Spectra(a) => commands::cmd_spectra(&cli.common, a),
        Command::Moments(a) => commands::cmd_moments(&cli.common, a),
    }?;
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
