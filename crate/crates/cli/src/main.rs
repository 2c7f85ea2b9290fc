//! Command-line front end: runs the identity suite, hermiticity and no-go
//! scans, kernel extraction, fiber evolution, Lyapunov estimation, canonical
//! transformation checks and the ring Liouvillian spectrum, emitting
//! machine-readable JSON or CSV.
//!
//! Exit codes: 0 success, 1 assertion failure, 2 usage or parse error.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kvn-forms", version, about = "phase-space form toolkit")]
struct Cli {
    /// Optional JSON config file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<String>,

    /// Output format where a choice exists.
    #[arg(long, global = true, value_parser = ["json", "csv"])]
    format: Option<String>,

    /// Seed for all random draws.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scalar-product table and resolution-of-identity suite.
    Identities(commands::IdentitiesArgs),
    /// Hermiticity residuals of the fiber Hamiltonian under a metric.
    Hermiticity(commands::HermiticityArgs),
    /// Sweep the generalized metric families and assert the dichotomy.
    NogoScan(commands::NogoArgs),
    /// Generic-Hessian kernel of the fiber Hamiltonian and its span.
    Kernel(commands::KernelArgs),
    /// Evolve a fiber state along a classical trajectory.
    Evolve(commands::EvolveArgs),
    /// Largest Lyapunov exponent, per orbit and ensemble mean.
    Lyapunov(commands::LyapunovArgs),
    /// Metric pushforward and hermiticity invariance under a scaling.
    Canonical(commands::CanonicalArgs),
    /// Ring-discretized Liouvillian spectrum.
    Spectrum(commands::SpectrumArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match config::Context::load(&cli.config, &cli.out, &cli.format, cli.seed) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match &cli.command {
        Command::Identities(args) => commands::run_identities(args, &ctx),
        Command::Hermiticity(args) => commands::run_hermiticity(args, &ctx),
        Command::NogoScan(args) => commands::run_nogo(args, &ctx),
        Command::Kernel(args) => commands::run_kernel(args, &ctx),
        Command::Evolve(args) => commands::run_evolve(args, &ctx),
        Command::Lyapunov(args) => commands::run_lyapunov(args, &ctx),
        Command::Canonical(args) => commands::run_canonical(args, &ctx),
        Command::Spectrum(args) => commands::run_spectrum(args, &ctx),
    };
    match outcome {
        Ok(commands::Outcome::Pass) => ExitCode::SUCCESS,
        Ok(commands::Outcome::AssertionFailed(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
