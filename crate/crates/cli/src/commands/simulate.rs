use std::time::Instant;

use clusterlr::cluster_sim::{plan, simulate_expectation, PlanRequest, SimOptions};
use clusterlr::lattice::chain;
use clusterlr::operators::{build_named_hamiltonian, exact_expectation, LocalOperator, ModelParams, Pauli, State};

use crate::config::{pauli_string, RunConfig, StateSpec};
use crate::output::{num, opt, Table};
use crate::{Outcome, RunError};

/// Largest system the exact oracle is run on.
const ORACLE_MAX_SITES: usize = 20;

pub const SIMULATE_HEADER: [&str; 8] = ["t", "m_star", "r", "clusters", "level_sum", "estimate", "exact", "abs_error"];
pub const ORACLE_HEADER: [&str; 2] = ["t", "expectation"];
pub const BENCH_HEADER: [&str; 5] = ["length", "repetitions", "clusters", "mean_seconds", "min_seconds"];

fn header_with_time(base: &[&'static str], timings: bool) -> Vec<&'static str> {
    let mut h = base.to_vec();
    if timings {
        h.push("wall_time");
    }
    h
}

pub fn run_simulate(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let model = cfg.model.as_ref().expect("checked");
    let (g, h) = model.build()?;
    let n = g.num_vertices();
    let a = pauli_string(cfg.observable.as_ref().expect("checked"))?;
    let rho = cfg.state.clone().unwrap_or(StateSpec::AllZero).build(n)?;
    let req = cfg.plan.clone().expect("checked");
    let p = cfg.bound_params();
    let anchor = *a.support().first().ok_or_else(|| RunError::config("observable must act on a site"))?;
    let ts = cfg.grid.as_ref().expect("checked").t.expand()?;
    let oracle = cfg.oracle && n <= ORACLE_MAX_SITES;

    let mut table = Table::new(&header_with_time(&SIMULATE_HEADER, cfg.record_timings));
    let mut out = Outcome::default();
    if cfg.oracle && !oracle {
        out.warnings.push(format!("oracle skipped: {n} sites exceed {ORACLE_MAX_SITES}"));
    }
    for &t in &ts {
        let started = Instant::now();
        let step = (|| -> Result<_, RunError> {
            let pl = plan(&p, &g, anchor, t, &req)?;
            let sim = simulate_expectation(&h, &a, &rho, t, &pl, &SimOptions::default())?;
            let exact = if oracle { Some(exact_expectation(&h, &a, &rho, t)?) } else { None };
            Ok((pl, sim, exact))
        })();
        let (pl, sim, exact) = match step {
            Ok(v) => v,
            Err(e) => {
                out.failure = Some(e);
                break;
            }
        };
        for w in pl.warnings.iter().chain(&sim.diagnostics.warnings) {
            if !out.warnings.contains(w) {
                out.warnings.push(w.clone());
            }
        }
        let elapsed = started.elapsed().as_secs_f64();
        for level in &sim.diagnostics.levels {
            let mut row = vec![
                num(t),
                level.size.to_string(),
                pl.r.to_string(),
                level.clusters.to_string(),
                num(level.level_sum),
                num(level.cumulative),
                opt(exact),
                opt(exact.map(|e| (level.cumulative - e).abs())),
            ];
            if cfg.record_timings {
                row.push(num(elapsed));
            }
            table.push(row);
        }
    }
    out.tables.push((cfg.outputs.results.clone(), table));
    Ok(out)
}

pub fn run_oracle(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let model = cfg.model.as_ref().expect("checked");
    let (g, h) = model.build()?;
    let n = g.num_vertices();
    let a = pauli_string(cfg.observable.as_ref().expect("checked"))?;
    let rho = cfg.state.clone().unwrap_or(StateSpec::AllZero).build(n)?;
    let ts = cfg.grid.as_ref().expect("checked").t.expand()?;
    let mut table = Table::new(&header_with_time(&ORACLE_HEADER, cfg.record_timings));
    let mut out = Outcome::default();
    for &t in &ts {
        let started = Instant::now();
        match exact_expectation(&h, &a, &rho, t) {
            Ok(v) => {
                let mut row = vec![num(t), num(v)];
                if cfg.record_timings {
                    row.push(num(started.elapsed().as_secs_f64()));
                }
                table.push(row);
            }
            Err(e) => {
                out.failure = Some(e.into());
                break;
            }
        }
    }
    out.tables.push((cfg.outputs.results.clone(), table));
    Ok(out)
}

/// Times the cluster simulator on TFIM chains (`r = 2`, `m* = 3`).
pub fn run_bench(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let spec = cfg.bench.as_ref().expect("checked");
    if spec.repetitions == 0 {
        return Err(RunError::config("bench needs at least one repetition"));
    }
    let params: ModelParams = [("J".to_string(), 1.0), ("g".to_string(), 1.0)].into();
    let mut table = Table::new(&BENCH_HEADER);
    for &l in &spec.lengths {
        let g = chain(l)?;
        let h = build_named_hamiltonian::<f64>("tfim", &g, &params)?;
        let a = LocalOperator::pauli(Pauli::Z, 0);
        let rho = State::all_zero(l);
        let pl = plan(&cfg.bound_params(), &g, 0, spec.t, &PlanRequest::desk(2, 3))?;
        let mut times = Vec::with_capacity(spec.repetitions);
        let mut clusters = 0;
        for _ in 0..spec.repetitions {
            let started = Instant::now();
            let sim = simulate_expectation(&h, &a, &rho, spec.t, &pl, &SimOptions::default())?;
            times.push(started.elapsed().as_secs_f64());
            clusters = sim.diagnostics.clusters_evaluated;
        }
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let min = times.iter().copied().fold(f64::INFINITY, f64::min);
        table.push(vec![l.to_string(), spec.repetitions.to_string(), clusters.to_string(), num(mean), num(min)]);
    }
    Ok(Outcome::table(cfg.outputs.results.clone(), table))
}
