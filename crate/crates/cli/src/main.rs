#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

/// Simulate dark-path holonomic qudit gates.
#[derive(Debug, Parser)]
#[command(name = "darkpath", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analytic and simulated matrix of a one-qudit gate.
    Gate(GateArgs),
    /// Average fidelity under systematic Rabi errors.
    Sweep(SweepArgs),
    /// Level populations through a gate program.
    Trace(TraceArgs),
    /// Search loop parameters for a target unitary.
    Solve(SolveArgs),
    /// Conditional two-qudit gate from the effective Hamiltonian.
    TwoQudit(TwoQuditArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Relative tolerance of the integrator.
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    /// Worker threads for parallel work.
    #[arg(long, global = true, env = "DARKPATH_THREADS")]
    pub threads: Option<usize>,
}

/// Gate selection shared by gate, trace and two-qudit.
#[derive(Debug, Clone, Args)]
pub struct GateSelect {
    /// Named qutrit gate: X3, Z3, T3 or H3.
    #[arg(long, conflicts_with = "program")]
    pub name: Option<String>,
    /// Gate program JSON file.
    #[arg(long)]
    pub program: Option<PathBuf>,
    /// Auxiliary coupling η applied to every loop.
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    #[command(flatten)]
    pub select: GateSelect,
    /// Systematic Rabi error δ.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Haar samples per point.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Points on each side of δ = 0; the grid has 2·N + 1 points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Largest |δ| on the grid.
    #[arg(long)]
    pub delta_max: Option<f64>,
    /// Comma-separated gate names.
    #[arg(long, value_delimiter = ',')]
    pub gates: Option<Vec<String>>,
    /// Comma-separated η values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub etas: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub select: GateSelect,
    /// Initial state: `uniformN` or comma-separated real amplitudes.
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Samples per loop.
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Target matrix JSON file.
    #[arg(long, conflicts_with = "name")]
    pub target: Option<PathBuf>,
    /// Named qutrit gate as the target.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub loops: Option<usize>,
    /// Gate distance to reach.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TwoQuditArgs {
    #[command(flatten)]
    pub select: GateSelect,
    /// Laser configuration JSON file.
    #[arg(long)]
    pub laser: Option<PathBuf>,
    /// Include the companion term of the effective Hamiltonian.
    #[arg(long)]
    pub companion: bool,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Gate(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::Trace(a) => &a.common,
            Command::Solve(a) => &a.common,
            Command::TwoQudit(a) => &a.common,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if let Some(n) = cli.command.common().threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let result = match &cli.command {
        Command::Gate(a) => commands::gate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Trace(a) => commands::trace(a),
        Command::Solve(a) => commands::solve(a),
        Command::TwoQudit(a) => commands::two_qudit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
