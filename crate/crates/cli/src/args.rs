use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sample_design::solver::{SingularPolicy, StepKind};
use sample_design::{OracleConfig, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "sample-design", version, about = "Select K of N sampling points minimizing weighted Cramér-Rao bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a problem instance file.
    Gen(GenArgs),
    /// Check an instance file.
    Validate(ValidateArgs),
    /// Run the dual subgradient solver.
    Solve(SolveArgs),
    /// Exhaustively search all size-K subsets.
    Oracle(OracleArgs),
    /// Compare the solver against the exhaustive oracle.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Linear,
    Sinusoid,
    Exponential,
    Explicit,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "linear")]
    pub model: ModelKind,
    /// Number of candidates (ignored for explicit models).
    #[arg(long)]
    pub n: Option<usize>,
    /// Parameter dimension (linear model only; fixed by the other models).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_var: f64,
    /// JSON array of matrices (flat row-major or nested rows) for `--model explicit`.
    #[arg(long)]
    pub fims: Option<PathBuf>,
    /// Comma-separated CRLB weights; defaults to all ones.
    #[arg(long, value_delimiter = ',')]
    pub psi: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Accept zero CRLB weights.
    #[arg(long)]
    pub allow_zero_psi: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepArg {
    Constant,
    Diminishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SingularArg {
    Ridge,
    Cap,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Base step size; defaults to 1 / (1 + max ‖F_n‖_F).
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long, value_enum, default_value = "diminishing")]
    pub step: StepArg,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub gap_tol: f64,
    #[arg(long, value_enum, default_value = "ridge")]
    pub singular_policy: SingularArg,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            step: match self.step {
                StepArg::Constant => StepKind::Constant,
                StepArg::Diminishing => StepKind::Diminishing,
            },
            alpha0: self.alpha0,
            max_iters: self.max_iters,
            gap_tol: self.gap_tol,
            singular: match self.singular_policy {
                SingularArg::Ridge => SingularPolicy::Ridge,
                SingularArg::Cap => SingularPolicy::Cap,
            },
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Result file (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-iteration trace (CSV).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = OracleConfig::default().cap)]
    pub oracle_cap: u128,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Compare on one instance file.
    #[arg(long, conflicts_with = "batch", required_unless_present = "batch")]
    pub instance: Option<PathBuf>,
    /// Compare on this many random small instances instead.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = OracleConfig::default().cap)]
    pub oracle_cap: u128,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
