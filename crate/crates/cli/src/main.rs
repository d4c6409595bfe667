use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clusterlr::bounds::ConstantsMode;
use clusterlr_cli::config::Command;
use clusterlr_cli::{execute, Invocation};

/// Cluster-expansion simulation and Lieb-Robinson bound tooling.
#[derive(Parser)]
#[command(name = "clusterlr", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Build a lattice and optionally count anchored clusters.
    Lattice(Common),
    /// Evaluate bound families over parameter grids.
    Bound(Common),
    /// Run the cluster-expansion simulator.
    Simulate(Common),
    /// Exact expectation values by full-system evolution.
    Oracle(Common),
    /// Symmetry-breaking experiments.
    Ssb(Common),
    /// Time the simulator on chains of increasing length.
    Bench(Common),
    /// Run the self-check suites.
    Verify(Common),
    /// Run whatever command the config names.
    Run(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Desk,
    PaperFormula,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to CLUSTERLR_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides how derived constants are chosen.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, c) = match cli.command {
        Sub::Lattice(c) => (Some(Command::Lattice), c),
        Sub::Bound(c) => (Some(Command::Bound), c),
        Sub::Simulate(c) => (Some(Command::Simulate), c),
        Sub::Oracle(c) => (Some(Command::Oracle), c),
        Sub::Ssb(c) => (Some(Command::Ssb), c),
        Sub::Bench(c) => (Some(Command::Bench), c),
        Sub::Verify(c) => (Some(Command::Verify), c),
        Sub::Run(c) => (None, c),
    };
    let inv = Invocation {
        config: c.config,
        out: c.out,
        seed: c.seed,
        threads: c.threads,
        mode: c.mode.map(|m| match m {
            Mode::Desk => ConstantsMode::Desk,
            Mode::PaperFormula => ConstantsMode::PaperFormula,
        }),
    };
    ExitCode::from(execute(expected, &inv) as u8)
}
