//! `froglab` — synthesis, reconstruction, and uniqueness experiments for
//! FROG-style phaseless measurements.
//!
//! Exit codes: 0 success, 1 internal error, 2 validation error.
//! `FROGLAB_THREADS` caps the worker count (0 = automatic).

mod commands;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "froglab",
    version,
    about = "FROG trace synthesis, reconstruction, and uniqueness experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a (possibly noisy) trace from signals or random draws
    Synth(commands::SynthArgs),
    /// Reconstruct signals from a trace (PCGP or ptychographic)
    Recon(commands::ReconArgs),
    /// Run the uniqueness-verification pipeline over one or more trials
    Verify(commands::VerifyArgs),
    /// Check trace invariance under the trivial ambiguity transforms
    Ambiguity(commands::AmbiguityArgs),
    /// Report phase-system null-space dimensions for chosen supports
    Nullspace(commands::NullspaceArgs),
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("FROGLAB_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let started = std::time::Instant::now();
    let result = match &cli.command {
        Command::Synth(args) => commands::run_synth(args),
        Command::Recon(args) => commands::run_recon(args),
        Command::Verify(args) => commands::run_verify(args),
        Command::Ambiguity(args) => commands::run_ambiguity(args),
        Command::Nullspace(args) => commands::run_nullspace(args),
    };
    // timing goes to stderr only so output files stay byte-reproducible
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<io::ValidationError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(1)
        }
    }
}
