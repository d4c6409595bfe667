pub mod bound;
pub mod lattice;
pub mod simulate;
pub mod ssb;
pub mod verify;

use std::time::Instant;

use crate::config::{Command, RunConfig};
use crate::output::PhaseTime;
use crate::{Outcome, RunError};

pub use verify::{run_suites, SuiteReport, VerifyReport};

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let started = Instant::now();
    let mut out = match cfg.command {
        Command::Lattice => lattice::run(cfg),
        Command::Bound => bound::run(cfg),
        Command::Simulate => simulate::run_simulate(cfg),
        Command::Oracle => simulate::run_oracle(cfg),
        Command::Ssb => ssb::run(cfg),
        Command::Bench => simulate::run_bench(cfg),
        Command::Verify => verify::run(cfg),
    }?;
    out.phases.insert(0, PhaseTime { phase: cfg.command.name().into(), seconds: started.elapsed().as_secs_f64() });
    Ok(out)
}
