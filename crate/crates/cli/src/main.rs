//! `flatwave`: identity checks, linear decay tables, nonlinear runs and their
//! diagnostics.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "flatwave", version, about = "Viscous surface waves in flattened coordinates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Residual battery of the exact identities on a seeded random state.
    CheckIdentities(commands::IdentityArgs),
    /// Linear decay table on the unbounded domain, with fitted exponents.
    LinearDecay(commands::DecayArgs),
    /// Nonlinear run driven by a config file.
    Simulate(commands::SimulateArgs),
    /// Recompute the functionals from the snapshots of a run directory.
    Energies(commands::EnergiesArgs),
    /// Least-squares decay exponent of one CSV column.
    FitDecay(commands::FitArgs),
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum Failure {
    /// A check ran and did not pass.
    Acceptance(String),
    Usage(String),
    Divergence(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Acceptance(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Divergence(_) => 3,
        }
    }
}

impl From<flatwave::Error> for Failure {
    fn from(e: flatwave::Error) -> Self {
        use flatwave::Error as E;
        match e {
            E::Diverged { .. } | E::DegenerateMapping { .. } | E::SingularMode { .. } => Failure::Divergence(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("FLATWAVE_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| Failure::Usage(format!("FLATWAVE_THREADS='{v}' is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = threads().and_then(|_| match cli.command {
        Command::CheckIdentities(a) => commands::check_identities(&a),
        Command::LinearDecay(a) => commands::linear_decay(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Energies(a) => commands::energies(&a),
        Command::FitDecay(a) => commands::fit_decay(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Acceptance(m) | Failure::Usage(m) | Failure::Divergence(m) => m,
            };
            eprintln!("flatwave: {msg}");
            ExitCode::from(f.code())
        }
    }
}

/// Output directory argument shared by the commands.
fn out_dir(p: &Option<PathBuf>, default: &str) -> PathBuf {
    p.clone().unwrap_or_else(|| PathBuf::from(default))
}
