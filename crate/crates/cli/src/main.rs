//! `sparsevb` command-line tool: fit a CSV dataset, run simulation
//! scenarios, compare orders and engines, and report design diagnostics.

mod commands;
mod io;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparsevb::VbError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Vb(#[from] VbError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Vb(e) if e.is_input_error() => 2,
            CliError::Vb(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sparsevb", version, about = "Spike-and-slab variational Bayes for sparse linear regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a design CSV and a response CSV.
    Fit(FitArgs),
    /// Run a replicated simulation scenario.
    Simulate(SimulateArgs),
    /// Compare update orders and engines on one scenario.
    Compare(CompareArgs),
    /// Coherence and sparse singular value diagnostics for a design.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Prioritized,
    Lex,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Laplace,
    Qmf,
    Gauss,
    GaussBatch,
    /// Gaussian slab scaled by the true signal norm (simulation only).
    GaussOracle,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub x: std::path::PathBuf,
    #[arg(long)]
    pub y: std::path::PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a0: f64,
    /// Defaults to the number of columns.
    #[arg(long)]
    pub b0: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = OrderArg::Prioritized)]
    pub order: OrderArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::Laplace)]
    pub engine: EngineArg,
    #[arg(long, default_value_t = 1.0)]
    pub slab_sd: f64,
    /// Divide the data by this noise sd before fitting.
    #[arg(long, conflicts_with = "estimate_sigma")]
    pub known_sigma: Option<f64>,
    /// Estimate the noise sd from a ridge fit and divide it out.
    #[arg(long)]
    pub estimate_sigma: bool,
    /// Center columns, scale them to norm sqrt(n) and append an intercept.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 1000)]
    pub max_sweeps: usize,
    #[arg(long)]
    pub track_elbo: bool,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: std::path::PathBuf,
    #[arg(long, value_enum, default_value_t = EngineArg::Laplace)]
    pub engine: EngineArg,
    #[arg(long, default_value_t = 1.0)]
    pub slab_sd: f64,
    #[arg(long, value_enum, default_value_t = OrderArg::Prioritized)]
    pub order: OrderArg,
    /// Seed of the random update order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Use this noise sd instead of the scenario's default handling.
    #[arg(long)]
    pub plugin_sigma: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_sweeps: usize,
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenario: std::path::PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "prioritized")]
    pub orders: Vec<OrderArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "laplace")]
    pub engines: Vec<EngineArg>,
    #[arg(long, default_value_t = 1.0)]
    pub slab_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub plugin_sigma: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_sweeps: usize,
    /// Also emit mean and sd of the per-fit runtime.
    #[arg(long)]
    pub with_runtime: bool,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub x: std::path::PathBuf,
    #[arg(long, default_value_t = 3)]
    pub s_max: usize,
    /// Largest number of column subsets enumerated for one s.
    #[arg(long, default_value_t = sparsevb::diagnostics::DEFAULT_SUBSET_CAP as u64)]
    pub max_subsets: u64,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("SPARSEVB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Input(format!("SPARSEVB_THREADS = {v:?} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sparsevb: {e}");
            if let CliError::Vb(VbError::EnumerationCap { .. }) = e {
                eprintln!("hint: lower --s-max or raise --max-subsets");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
