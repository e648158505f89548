//! `simknock`: knockoff-based selection of features shared across studies.
//!
//! Exit codes: 0 on success, 2 for invalid input (arguments, file
//! contents, infeasible settings), 3 when a computation fails
//! numerically on valid input.

mod config;
mod io;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "simknock",
    version,
    about = "FDR-controlled selection of features that carry signal in every study"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a selection method on one or more study files.
    Select(SelectArgs),
    /// Run Monte-Carlo replicates of synthetic multi-study problems.
    Simulate(SimulateArgs),
    /// Construct a knockoff copy of a design matrix.
    Knockoffs(KnockoffsArgs),
    /// Estimate how far a knockoff sampler is from exchangeability.
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SelectMethod {
    Simultaneous,
    Pooling,
    Intersection,
}

#[derive(clap::Args)]
pub struct SelectArgs {
    /// Study CSV (first column response, remaining columns features).
    /// Repeat once per study; all studies must share feature columns.
    #[arg(long = "study", required = true)]
    pub study: Vec<PathBuf>,
    /// Response family (gaussian or binomial), once for all studies or
    /// once per study.
    #[arg(long = "family")]
    pub family: Vec<String>,
    /// Selection method.
    #[arg(long, value_enum, default_value = "simultaneous")]
    pub method: SelectMethod,
    /// Combiner for the per-study statistics (simultaneous method).
    #[arg(long, default_value = "oscf-max")]
    pub combiner: String,
    /// Knockoff construction (fixed-x or second-order), once for all
    /// studies or once per study. Defaults by family.
    #[arg(long = "construction")]
    pub construction: Vec<String>,
    /// Target false discovery rate, in (0, 1).
    #[arg(long, default_value_t = 0.2)]
    pub q: f64,
    /// Use the more conservative +1 threshold variant.
    #[arg(long)]
    pub plus: bool,
    /// Keep only the d features with the strongest marginal association
    /// in every study before running the filter.
    #[arg(long = "screen-top-d")]
    pub screen: Option<usize>,
    /// With pooling: standardize each response and pool mixed families
    /// as one continuous regression.
    #[arg(long)]
    pub force_continuous: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output CSV path; stdout when absent.
    #[arg(long = "out", short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SimulateArgs {
    /// Config file of key = value lines; see the README for keys.
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV path; stdout when absent.
    #[arg(long = "out", short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct KnockoffsArgs {
    /// Design CSV (every column a feature, no response).
    #[arg(long)]
    pub input: PathBuf,
    /// fixed-x, second-order or model-x-gaussian.
    #[arg(long, default_value = "fixed-x")]
    pub construction: String,
    /// Gaussian model CSV for model-x-gaussian: mean row, then the
    /// covariance matrix, under the same header as the design.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output CSV path; stdout when absent.
    #[arg(long = "out", short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct DiagnoseArgs {
    /// Design CSV, once per study.
    #[arg(long = "x", required = true)]
    pub x: Vec<PathBuf>,
    /// Knockoff CSV produced for that design, once per study.
    #[arg(long = "xtilde", required = true)]
    pub xtilde: Vec<PathBuf>,
    /// Model the knockoffs were sampled under, once per study.
    #[arg(long = "p-model", required = true)]
    pub p_model: Vec<PathBuf>,
    /// Model believed to generate the data, once per study.
    #[arg(long = "q-model", required = true)]
    pub q_model: Vec<PathBuf>,
    /// Output CSV path; stdout when absent.
    #[arg(long = "out", short = 'o')]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Select(args) => run::select(args),
        Command::Simulate(args) => run::simulate(args),
        Command::Knockoffs(args) => run::knockoffs(args),
        Command::Diagnose(args) => run::diagnose(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Numerical failures on structurally valid input get their
            // own code so callers can distinguish them from bad input.
            let numerical = err
                .downcast_ref::<simknock::Error>()
                .is_some_and(|e| !e.is_validation());
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}
