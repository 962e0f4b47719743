//! `fadenet` command-line front end.
//!
//! Exit statuses: 0 success, 1 usage error, 2 invalid input or failed
//! computation, 3 flow solution did not converge (output still written).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod export;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fadenet", version, about = "Achievable rates of Rayleigh-fading erasure networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Point-to-point throughput of each scheme over an SNR range (CSV).
    PtpSweep(SweepArgs),
    /// Network computations on a JSON graph file.
    #[command(subcommand)]
    Net(NetCommand),
    /// Monte Carlo simulation of a link or a unicast network.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Scheme {
    OneRate,
    TwoRate,
    InfiniteRate,
    CsirCapacity,
    CsirtWaterfilling,
}

impl Scheme {
    pub fn column(self) -> &'static str {
        match self {
            Scheme::OneRate => "one_rate",
            Scheme::TwoRate => "two_rate",
            Scheme::InfiniteRate => "infinite_rate",
            Scheme::CsirCapacity => "csir_capacity",
            Scheme::CsirtWaterfilling => "csirt_waterfilling",
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Lowest SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub snr_lo: f64,
    /// Highest SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub snr_hi: f64,
    /// Number of evenly spaced SNR points.
    #[arg(long)]
    pub points: usize,
    /// Comma-separated schemes to evaluate.
    #[arg(long, value_delimiter = ',', required = true)]
    pub schemes: Vec<Scheme>,
    /// Mean link gain; SNR is 10 log10(P sigma2).
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum NetCommand {
    /// Flow-based rate optimization (JSON).
    Optimize(OptimizeArgs),
    /// Fixed-rate cut-set rate and every cut's value (JSON).
    Cutset(CutsetArgs),
    /// Monte Carlo cut-set upper bound on capacity (JSON).
    Bound(BoundArgs),
    /// Achievable rate, upper bound and gap constant over powers (CSV).
    Gap(GapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepModeArg {
    Diminishing,
    Constant,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Iteration count.
    #[arg(long, default_value_t = 20_000)]
    pub iters: usize,
    /// Source-rate step scale (default 0.5 / |D|).
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Queue step scale (default 2 / |D|).
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long, value_enum, default_value_t = StepModeArg::Diminishing)]
    pub step_mode: StepModeArg,
    /// Trailing fraction of iterations averaged into the solution.
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Record every k-th iterate in the exported trace.
    #[arg(long)]
    pub trace_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CutsetArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Coarse grid size of each rate line search.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Random restarts in addition to the warm start.
    #[arg(long, default_value_t = 2)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated node powers, applied to every node in turn.
    #[arg(long, value_delimiter = ',', required = true)]
    pub powers: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PtpScheme {
    /// One rate, `--rate`.
    Fixed,
    /// Throughput-optimal two-layer superposition.
    TwoLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateSource {
    /// Averaged rates and final priorities of the flow solver.
    Flow,
    /// Fixed-rate cut-set optimum, neighbors ranked by mean gain.
    Cutset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["graph", "ptp"])))]
pub struct SimulateArgs {
    /// Simulate unicast over this graph.
    #[arg(long, conflicts_with_all = ["ptp", "rate", "power", "sigma2", "scheme"])]
    pub graph: Option<PathBuf>,
    /// Simulate a single link.
    #[arg(long)]
    pub ptp: bool,
    #[arg(long, requires = "ptp")]
    pub rate: Option<f64>,
    #[arg(long, requires = "ptp")]
    pub power: Option<f64>,
    #[arg(long, requires = "ptp")]
    pub sigma2: Option<f64>,
    #[arg(long, value_enum, requires = "ptp")]
    pub scheme: Option<PtpScheme>,
    #[arg(long, value_enum, default_value_t = RateSource::Flow)]
    pub rates_from: RateSource,
    #[arg(long, default_value_t = 100_000)]
    pub packets: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Failure classes, each with its exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Invalid(String),
    NotConverged,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::NotConverged => 3,
        }
    }
}

impl From<fadenet::Error> for Failure {
    fn from(e: fadenet::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let invocation = commands::invocation();
    let result = match &cli.command {
        Command::PtpSweep(a) => commands::ptp_sweep(a, &invocation),
        Command::Net(NetCommand::Optimize(a)) => commands::net_optimize(a),
        Command::Net(NetCommand::Cutset(a)) => commands::net_cutset(a),
        Command::Net(NetCommand::Bound(a)) => commands::net_bound(a),
        Command::Net(NetCommand::Gap(a)) => commands::net_gap(a, &invocation),
        Command::Simulate(a) => commands::simulate(a, &invocation),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Invalid(m) => eprintln!("error: {m}"),
                Failure::NotConverged => eprintln!("warning: flow solution did not converge; partial output written"),
            }
            ExitCode::from(f.code())
        }
    }
}
