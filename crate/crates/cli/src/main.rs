use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use finsler_cli::{run, Command, Overrides, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Tensors,
    Geodesic,
    SolitonCheck,
    IdentitySuite,
    VerifyBounds,
    BerwaldCheck,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Tensors => Command::Tensors,
            Cmd::Geodesic => Command::Geodesic,
            Cmd::SolitonCheck => Command::SolitonCheck,
            Cmd::IdentitySuite => Command::IdentitySuite,
            Cmd::VerifyBounds => Command::VerifyBounds,
            Cmd::BerwaldCheck => Command::BerwaldCheck,
        }
    }
}

/// Curvature, geodesic and soliton checks on Finsler metric measure spaces.
///
/// Set FINSLER_THREADS to fix the worker count.
#[derive(Debug, Parser)]
#[command(name = "finsler-lab", version)]
struct Args {
    command: Cmd,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sampling seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        command: Some(args.command.into()),
        out: args.out,
        seed: args.seed,
    };
    let cfg = match RunConfig::load(&args.config, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("finsler-lab: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = run(&cfg);
    if let Err(e) = outcome.write(&cfg) {
        eprintln!("finsler-lab: cannot write to {}: {e}", cfg.out.display());
        return ExitCode::from(2);
    }
    print!(
        "{}",
        outcome.artifacts.get("summary.txt").unwrap_or_default()
    );
    ExitCode::from(outcome.exit_code() as u8)
}
