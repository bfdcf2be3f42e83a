//! `leaps`: search a configuration pool for an approximately optimal configuration, check
//! the answer against a full runtime table, generate synthetic tables and sweep the
//! phase multiplier.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leaps_core::oracle::subprocess::{ExitPolicy, TimingMode};
use leaps_core::{CensoringPolicy, GridAdvance, StoppingRule};

#[derive(Debug, Parser)]
#[command(name = "leaps", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one search and write a JSON report.
    Run(RunArgs),
    /// Run one search per multiplier and write a CSV summary.
    Sweep(SweepArgs),
    /// Check a configuration against a full runtime table.
    Verify(VerifyArgs),
    /// Write a synthetic runtime table with its metadata sidecar.
    Generate(GenerateArgs),
}

/// Where measurements come from: a runtime table, or a solver run as a subprocess.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Runtime table CSV (reads `<table>.meta.json` next to it).
    #[arg(long, value_name = "PATH", conflicts_with_all = ["exec_cmd", "instances_dir", "configs_json"])]
    pub table: Option<PathBuf>,
    /// Solver command template with `{flags}` and `{instance}` placeholders.
    #[arg(long, value_name = "TEMPLATE", requires_all = ["instances_dir", "configs_json"])]
    pub exec_cmd: Option<String>,
    /// Directory whose regular files are the instances.
    #[arg(long, value_name = "PATH")]
    pub instances_dir: Option<PathBuf>,
    /// JSON list of flag lists, one per configuration.
    #[arg(long, value_name = "PATH")]
    pub configs_json: Option<PathBuf>,
    /// Requests beyond a table's cap: fail (`strict`) or clamp to the cap (`clamp`).
    #[arg(long, default_value = "strict")]
    pub censoring: CensoringPolicy,
    /// Subprocess timing: child CPU time or wall-clock time.
    #[arg(long, default_value = "cpu")]
    pub timing: TimingMode,
    /// Subprocess exits with nonzero status: `fail` or `treat-as-timeout`.
    #[arg(long, default_value = "fail")]
    pub on_solver_error: ExitPolicy,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Precision, in (0, 1/3).
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Allowed timeout fraction, in (0, 1).
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    /// Failure probability, in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    pub zeta: f64,
    /// Lower bound on every runtime, seconds (table mode defaults to the sidecar value).
    #[arg(long)]
    pub kappa0: Option<f64>,
    #[arg(long, default_value = "ebg")]
    pub stopping: StoppingRule,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Seconds charged per resumed (configuration, instance) pair, reported separately.
    #[arg(long, default_value_t = 0.0)]
    pub resume_overhead: f64,
    /// Search a random subsample covering the fastest fraction R of configurations.
    #[arg(long, value_name = "R")]
    pub subsample_gamma: Option<f64>,
    /// Give up after N phases.
    #[arg(long, value_name = "N")]
    pub max_phases: Option<u32>,
    /// Geometric-grid update of the EBG rule.
    #[arg(long, default_value = "loop")]
    pub grid_advance: GridAdvance,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// Growth factor of the runtime guess between phases.
    #[arg(long, default_value_t = 2.0)]
    pub multiplier: f64,
    /// Report path (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-phase, per-configuration CSV trace.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// Comma-separated multipliers.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub multipliers: Vec<f64>,
    /// CSV path (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_name = "PATH")]
    pub table: PathBuf,
    /// Configuration to check.
    #[arg(long, conflicts_with = "report")]
    pub config: Option<usize>,
    /// Check the configuration chosen in this run report.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Defaults to the report's value, else 0.2.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Defaults to the report's value, else 0.2.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value = "strict")]
    pub censoring: CensoringPolicy,
    /// Also write sorted capped-mean curves, one file per `--deltas` entry.
    #[arg(long)]
    pub curve: bool,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.25")]
    pub deltas: Vec<f64>,
    /// Witness path (default: stdout); with `--curve`, curves go next to it.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// One configuration per occurrence: `constant:MEAN`, `lognormal:MU:SIGMA` or
    /// `heavytail:B`.
    #[arg(long = "model", required = true, value_name = "SPEC")]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 900.0)]
    pub cap: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => commands::run(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::Generate(args) => commands::generate(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
