//! `proxcert`: run solvers, certify traces, compare solvers.
//!
//! Exit codes: 0 success, 1 certificate violation or corrupted data,
//! 2 configuration or format error, 3 reference solution unavailable.

mod commands;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use proxcert::Error;

#[derive(Parser)]
#[command(name = "proxcert", version, about = "Accelerated proximal gradient solvers with per-iteration certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on a generated problem and write its trace.
    Run(RunArgs),
    /// Re-check every applicable certificate on a recorded trace.
    Certify(CertifyArgs),
    /// Run several solvers on one problem and tabulate their gaps.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
pub struct ProblemArgs {
    /// quadratic, lasso, lasso-fat or box-quadratic.
    #[arg(long, default_value = "quadratic")]
    pub problem: String,
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    /// Rows of the design matrix (lasso-fat); defaults to dim/2.
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub cond: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lam: f64,
    /// Overridden by PROXCERT_SEED when set.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Clone)]
pub struct SolverArgs {
    /// ista, apm, mapm or strongly_convex_apm.
    #[arg(long, default_value = "mapm")]
    pub solver: String,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// half-inverse-L, inverse-L or explicit:<value>.
    #[arg(long, default_value = "half-inverse-L")]
    pub step_mode: String,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0.0)]
    pub grad_map_tol: f64,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// csv or json-lines.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Trace file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Store x_k and y_k in the trace (needed by `certify`).
    #[arg(long)]
    pub record_iterates: bool,
    /// Iteration budget of the reference solve behind the gap and energy
    /// columns.
    #[arg(long, default_value_t = 200_000)]
    pub reference_budget: usize,
}

#[derive(Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Report encoding: csv or json-lines.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Certify against this problem instead of the one named in the trace;
    /// unset fields default to the trace's values. Refused unless the
    /// content hashes agree.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cond: Option<f64>,
    #[arg(long)]
    pub lam: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 200_000)]
    pub reference_budget: usize,
    /// Add this to the reference optimum before certifying (fault injection).
    #[arg(long, allow_hyphen_values = true)]
    pub f_star_shift: Option<f64>,
    /// Also check the energy upper bound over (ω, λ, σ) ∈ {0.25, 0.5, 1, 2}³.
    #[arg(long)]
    pub prop2_sweep: bool,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// One solver per occurrence, e.g.
    /// `solver=mapm,alpha=3,step-mode=half-inverse-L,max-iters=1000`.
    /// Problem keys (problem, dim, rows, cond, lam, seed) may be repeated
    /// but must match the shared problem.
    #[arg(long = "spec", required = true)]
    pub specs: Vec<String>,
    /// Table encoding: csv or json-lines.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Gap table; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON summary; defaults to `<output>.summary.json`, or stderr.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, default_value_t = 200_000)]
    pub reference_budget: usize,
}

/// Failure carrying its exit status.
#[derive(Debug)]
pub enum Failure {
    Violation(String),
    Corrupted(String),
    Config(String),
    Reference(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) | Failure::Corrupted(_) => 1,
            Failure::Config(_) => 2,
            Failure::Reference(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Violation(m) | Failure::Corrupted(m) | Failure::Config(m) | Failure::Reference(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DataCorruption(_) => Failure::Corrupted(msg),
            Error::ReferenceUnavailable(_) => Failure::Reference(msg),
            Error::RejectedInput(_)
            | Error::RejectedConfig(_)
            | Error::Format(_)
            | Error::FitUnavailable(_)
            | Error::Io(_) => Failure::Config(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Certify(args) => commands::certify(args),
        Command::Compare(args) => commands::compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("proxcert: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
