//! Command-line experiment harness.
//!
//! Every subcommand writes one table (CSV or JSON) whose rows echo all
//! parameters and the seed. Output never depends on the worker count.

mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::profiles::Interpolation;
pub use output::{Cell, Format, Table};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "HIERPERC_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "hierperc",
    version,
    about = "Long-range percolation on the hierarchical lattice"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Largest-cluster density curves over ball levels.
    Simulate(SimulateArgs),
    /// Good-ball cascade: closed-form certificate or finite-scale simulation.
    Cascade(CascadeArgs),
    /// Mean-field β_k recursion, survival product and Σ e^{-c_k}.
    Meanfield(MeanfieldArgs),
    /// Erdős–Rényi connectivity and binomial tail tables.
    Erconn(ErconnArgs),
    /// Exact annulus-event probabilities next to their asymptotic forms.
    Asymptotics(AsymptoticsArgs),
    /// Disconnection probabilities of successive annuli.
    Preperc(PrepercArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment seed. Required whenever something is sampled.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Defaults to $HIERPERC_WORKERS.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Flat `key = value` file of flags; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RatesKind {
    Constant,
    LogPoly,
    ScaledLog,
    Table,
}

/// A connection profile `p_(k) = min(c_k / N^{k(1+δ)}, 1)`.
#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    #[arg(long, default_value_t = 2)]
    pub base: u32,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "constant")]
    pub rates: RatesKind,
    /// Constant rate, or the additive constant of the scaled-log family.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    #[arg(long, default_value = "lower")]
    pub interpolation: Interpolation,
    /// Table of rates `c_1, c_2, ...`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 1)]
    pub k_min: u32,
    #[arg(long, default_value_t = 10)]
    pub k_max: u32,
    #[arg(long, default_value_t = 100)]
    pub replicates: u64,
    /// One row per replicate instead of per level.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false", action = ArgAction::Set)]
    pub per_replicate: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CascadeMode {
    Certificate,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GoodKind {
    Beta,
    Gamma,
}

#[derive(Debug, Clone, Args)]
pub struct CascadeArgs {
    #[arg(long, value_enum, default_value = "certificate")]
    pub mode: CascadeMode,
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Sets `a` to this multiple of the threshold `a_*` (certificate mode).
    #[arg(long)]
    pub a_factor: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub theta: f64,
    /// Chernoff constant; derived numerically when absent.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    /// Starting index evaluated in addition to the smallest one found.
    #[arg(long)]
    pub n0: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub horizon: u64,
    /// Emit the induction steps instead of the summary row.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false", action = ArgAction::Set)]
    pub induction: bool,
    #[arg(long, value_enum, default_value = "beta")]
    pub good: GoodKind,
    /// Initial β of the cascade (simulate mode).
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.75)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2)]
    pub n_min: u64,
    #[arg(long, default_value_t = 4)]
    pub n_max: u64,
    #[arg(long, default_value_t = 100)]
    pub replicates: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeanfieldRatesKind {
    Constant,
    LogK,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct MeanfieldArgs {
    #[arg(long, value_enum, default_value = "log-k")]
    pub rates: MeanfieldRatesKind,
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// Shift `s` in `c_k = a ln(k + s)`.
    #[arg(long, default_value_t = crate::meanfield::DEFAULT_LOG_SHIFT)]
    pub shift: f64,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub kmax: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Emit the full β_k table instead of the summary row.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false", action = ArgAction::Set)]
    pub sequence: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErTable {
    Connectivity,
    Tails,
    Cor53,
    Kappa,
}

#[derive(Debug, Clone, Args)]
pub struct ErconnArgs {
    #[arg(long, value_enum, default_value = "connectivity")]
    pub table: ErTable,
    #[arg(long, default_value_t = 10)]
    pub n: u64,
    /// Last `n` of a connectivity range.
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Uses `p = a ln n / n` when `--p` is absent.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false", action = ArgAction::Set)]
    pub exact: bool,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false", action = ArgAction::Set)]
    pub mc: bool,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false", action = ArgAction::Set)]
    pub durrett: bool,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: u64,
    /// Constants of the non-connectivity bound.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false", action = ArgAction::Set)]
    pub exponent13: bool,
    /// Success probability of the binomial in the tail tables.
    #[arg(long, default_value_t = 0.2)]
    pub q: f64,
    #[arg(long, default_value_t = 2.0)]
    pub tail_c: f64,
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps_max: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AsymptoticsKind {
    /// Connection events between consecutive annuli (b = 0 profile).
    Annulus,
    /// Skipping over two annuli.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnnulusEvent {
    A,
    B,
    C,
    D,
    E,
    F,
}

#[derive(Debug, Clone, Args)]
pub struct AsymptoticsArgs {
    #[arg(long, value_enum, default_value = "annulus")]
    pub kind: AsymptoticsKind,
    #[arg(long, value_enum, default_value = "c")]
    pub event: AnnulusEvent,
    #[arg(long, default_value_t = 3)]
    pub base: u32,
    #[arg(long, default_value_t = 1.0)]
    pub k_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 2)]
    pub j: u64,
    #[arg(long, default_value_t = 1)]
    pub l: u64,
    /// Constant of the skip bound.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 2)]
    pub n_min: u64,
    #[arg(long, default_value_t = 100)]
    pub n_max: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct PrepercArgs {
    #[arg(long, default_value_t = 3)]
    pub base: u32,
    #[arg(long, default_value_t = 1.0)]
    pub k_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    #[arg(long, default_value_t = 2)]
    pub n_min: u64,
    #[arg(long, default_value_t = 1000)]
    pub n_max: u64,
    /// Draw the disconnection indicators (needs `--seed`).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false", action = ArgAction::Set)]
    pub sampled: bool,
    /// Emit one diagnostics row instead of the per-n table.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false", action = ArgAction::Set)]
    pub summary: bool,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate(a) => &a.common,
            Command::Cascade(a) => &a.common,
            Command::Meanfield(a) => &a.common,
            Command::Erconn(a) => &a.common,
            Command::Asymptotics(a) => &a.common,
            Command::Preperc(a) => &a.common,
        }
    }
}

/// Worker count from the flag, then the environment, then 0 (all cores).
fn workers(common: &Common) -> Result<usize> {
    if let Some(w) = common.workers {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{WORKERS_ENV} must be a nonnegative integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(0),
    }
}

/// Builds the result table of a parsed command.
pub fn execute(command: &Command) -> Result<Table> {
    let w = workers(command.common())?;
    match command {
        Command::Simulate(a) => commands::simulate(a, w),
        Command::Cascade(a) => commands::cascade(a, w),
        Command::Meanfield(a) => commands::meanfield(a),
        Command::Erconn(a) => commands::erconn(a, w),
        Command::Asymptotics(a) => commands::asymptotics(a),
        Command::Preperc(a) => commands::preperc(a),
    }
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidInput(_) => 2,
        Error::InfeasibleScale(_) => 3,
        _ => 1,
    }
}

fn write_table(table: &Table, common: &Common) -> Result<()> {
    match &common.output {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| Error::Io(format!("cannot create {}: {e}", path.display())))?;
            let mut out = std::io::BufWriter::new(file);
            table.write(common.format, &mut out)?;
            out.flush().map_err(|e| Error::Io(e.to_string()))
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            table.write(common.format, &mut out)?;
            out.flush().map_err(|e| Error::Io(e.to_string()))
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code: 0 success, 2 configuration or input error,
/// 3 infeasible scale, 1 anything else.
pub fn run(args: Vec<String>) -> i32 {
    let args = match config::splice_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let result = execute(&cli.command).and_then(|t| write_table(&t, cli.command.common()));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
