//! `balreg`: generate, solve, evaluate and cross-check balanced-regret
//! instances.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser)]
#[command(name = "balreg", version, about = "Balanced-regret solvers for selection, knapsack and shortest-path problems")]
struct Cli {
    /// More log output on standard error (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded instance as JSON.
    Generate(GenerateArgs),
    /// Solve one instance and write a JSON report.
    Solve(SolveArgs),
    /// Cross-criterion comparison matrix over a batch of instances.
    Evaluate(EvaluateArgs),
    /// Run every applicable method on small instances and compare.
    Crosscheck(CrosscheckArgs),
    /// Build shortest-path instances from travel-time scenarios.
    IngestGraph(IngestArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Family {
    Selection,
    Multirep,
    Knapsack,
    Layered,
    Equipartition,
    Partition,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Number of items (weights for the reductions, layers for `layered`).
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `half` or `value:C`.
    #[arg(long, default_value = "half")]
    pub capacity_rule: String,
    #[arg(long, default_value_t = 0)]
    pub gamma: usize,
    #[arg(long, default_value_t = 0)]
    pub gamma_prime: usize,
    /// Partition count for `multirep`.
    #[arg(long, default_value_t = 2)]
    pub partitions: usize,
    /// Layer width for `layered`.
    #[arg(long, default_value_t = 2)]
    pub width: usize,
    /// Explicit reduction weights; drawn from `1..=10` otherwise.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<i64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Cheapest exact method for the instance.
    Auto,
    Iterative,
    Enumeration,
    Compact,
    Bruteforce,
    RegretPoly,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Adversary {
    Auto,
    Dp,
    Milp,
    Bruteforce,
}

#[derive(Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: Method,
    /// Adversarial solver used by the iterative method.
    #[arg(long, value_enum, default_value = "auto")]
    pub adversary: Adversary,
    /// Add dominance precedences as cuts to the compact model.
    #[arg(long)]
    pub cuts: bool,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub node_limit: Option<usize>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
    /// Write the (initial) MILP in LP format.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Glob pattern of instance files.
    #[arg(long)]
    pub instances: String,
    /// `all` or a comma-separated list such as `wc-i,r-g,br`.
    #[arg(long, default_value = "all")]
    pub criteria: String,
    /// Inclusive balancing-budget range `A..B` for the balanced rows.
    #[arg(long)]
    pub gamma_prime_range: Option<String>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Also write every raw value.
    #[arg(long)]
    pub values: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CrosscheckArgs {
    #[arg(long)]
    pub instances: String,
    /// Instances with more items are skipped.
    #[arg(long, default_value_t = 12)]
    pub max_n: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Optional CSV of every method's value.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub gamma: usize,
    #[arg(long, default_value_t = 1)]
    pub gamma_prime: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Solve(a) => commands::solve(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Crosscheck(a) => commands::crosscheck(a),
        Command::IngestGraph(a) => commands::ingest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(balreg::Error::Infeasible(_) | balreg::Error::Scale(_)) => 2,
            CliError::Core(_) => 1,
            CliError::Limit(_) => 3,
            CliError::Disagreement(_) => 4,
        }
    }
}
