use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use clusterlr::causal::term_vanishing_check;
use clusterlr::cluster_sim::{operator_expansion, plan, simulate_expectation, Mutation, PlanRequest, SimOptions};
use clusterlr::lattice::{
    build_rectangular_lattice, build_square_lattice_with, chain, enumerate_clusters_up_to, tile_boxes, Boundary,
    FactorGraph, DEFAULT_CLUSTER_CAP,
};
use clusterlr::operators::{
    build_named_hamiltonian, exact_expectation, heisenberg_evolve, LocalOperator, ModelParams, Pauli, State,
};
use clusterlr::{Hamiltonian, Operator};

use super::lattice::brute_force_counts;
use super::ssb::identity_rows;
use crate::config::{RunConfig, Suite, VerifySpec};
use crate::{Outcome, RunError};

/// Tolerances for the numerical suites.
const VANISHING_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub cases: usize,
    /// Largest deviation seen (count mismatches for `cluster_counts`).
    pub worst_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub mutation: Option<String>,
    pub suites: Vec<SuiteReport>,
}

fn tfim(g: &FactorGraph, j: f64, field: f64) -> Result<Hamiltonian, RunError> {
    let p: ModelParams = [("J".to_string(), j), ("g".to_string(), field)].into();
    Ok(build_named_hamiltonian("tfim", g, &p)?)
}

fn random_pauli(rng: &mut ChaCha8Rng, site: usize) -> Operator {
    LocalOperator::pauli([Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..3)], site)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VanishingTally {
    pub sequences: usize,
    /// Empty forest or a missing target.
    pub non_causal: usize,
    pub causal_nonzero: usize,
    /// Largest norm among the non-causal sequences.
    pub worst_norm: f64,
}

/// Every factor sequence of length `1..=max_len` is checked: when the causal
/// forest is empty or misses a target, the nested commutator must vanish.
pub fn vanishing_cases(
    h: &Hamiltonian,
    r: &[usize],
    s_list: &[Vec<usize>],
    max_len: usize,
    seed: u64,
) -> Result<VanishingTally, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_pauli(&mut rng, r[0]);
    let probes: Vec<Operator> = s_list.iter().map(|s| random_pauli(&mut rng, s[0])).collect();
    let nf = h.terms().len();
    let mut tally = VanishingTally::default();
    for len in 1..=max_len {
        let mut seq = vec![0usize; len];
        loop {
            let (forest, norm) = term_vanishing_check(h, &seq, r, s_list, &a, &probes)?;
            tally.sequences += 1;
            if forest.as_ref().map_or(true, |f| !f.is_causal()) {
                tally.non_causal += 1;
                tally.worst_norm = tally.worst_norm.max(norm);
            } else if norm > VANISHING_TOL {
                tally.causal_nonzero += 1;
            }
            // Odometer increment.
            let mut k = 0;
            while k < len {
                seq[k] += 1;
                if seq[k] < nf {
                    break;
                }
                seq[k] = 0;
                k += 1;
            }
            if k == len {
                break;
            }
        }
    }
    Ok(tally)
}

fn vanishing_suite(seed: u64) -> Result<SuiteReport, RunError> {
    let g = chain(5)?;
    let p: ModelParams = [("seed".to_string(), 3.0), ("scale".to_string(), 0.5)].into();
    let h = build_named_hamiltonian("random2local", &g, &p)?;
    let configs: [(&[usize], &[&[usize]]); 4] =
        [(&[0], &[&[4]]), (&[0], &[&[2]]), (&[2], &[&[0], &[4]]), (&[0, 1], &[&[3]])];
    let (mut cases, mut worst) = (0, 0.0f64);
    for (k, (r, s)) in configs.iter().enumerate() {
        let s_list: Vec<Vec<usize>> = s.iter().map(|x| x.to_vec()).collect();
        let tally = vanishing_cases(&h, r, &s_list, 3, seed.wrapping_add(k as u64))?;
        cases += tally.non_causal;
        worst = worst.max(tally.worst_norm);
    }
    Ok(SuiteReport { suite: Suite::Vanishing, pass: worst <= VANISHING_TOL, cases, worst_gap: worst })
}

fn identity_suite(seed: u64) -> Result<SuiteReport, RunError> {
    let rows = identity_rows(20, 6, 3, &[0.3, 0.9], seed)?;
    let worst = rows.iter().map(|r| r.check.gap).fold(0.0, f64::max);
    Ok(SuiteReport { suite: Suite::Identity, pass: worst <= IDENTITY_TOL, cases: rows.len(), worst_gap: worst })
}

fn cluster_count_suite() -> Result<SuiteReport, RunError> {
    let graphs = [
        chain(10)?,
        build_rectangular_lattice(&[3, 4], 1)?,
        build_square_lattice_with(2, 4, 1, Boundary::Periodic)?,
        build_square_lattice_with(2, 3, 2, Boundary::Open)?,
    ];
    let m_max = 5;
    let (mut cases, mut mismatches) = (0, 0usize);
    for g in &graphs {
        let delta = g.max_neighbor_count() as f64;
        for root in [0, g.num_vertices() / 2] {
            let levels = enumerate_clusters_up_to(g.adjacency(), root, m_max, DEFAULT_CLUSTER_CAP)?;
            let brute = brute_force_counts(g.adjacency(), root, m_max);
            for (k, level) in levels.iter().enumerate() {
                let m = k + 1;
                cases += 1;
                let cap = (std::f64::consts::E * delta).powi(m as i32);
                if level.len() != brute[m] || level.len() as f64 > cap {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(SuiteReport { suite: Suite::ClusterCounts, pass: mismatches == 0, cases, worst_gap: mismatches as f64 })
}

/// Largest deviation of the full two-box expansion on a 6-site TFIM chain
/// from the exact evolution: operator sum against `A(t)` and the simulated
/// expectation against the oracle.
pub fn completeness_gap(t: f64, mutation: Option<Mutation>) -> Result<f64, RunError> {
    let g = chain(6)?;
    let h = tfim(&g, 1.0, 0.9)?;
    let a = LocalOperator::pauli(Pauli::Z, 0);
    let all: Vec<usize> = (0..6).collect();
    let tiling = tile_boxes(&g, 3, 0)?;
    let pieces = operator_expansion(&h, &a, &tiling, tiling.num_boxes(), t)?;
    let mut sum = LocalOperator::new(all.clone(), clusterlr::Matrix::zeros(64, 64))?;
    for (_, piece) in &pieces {
        sum = sum.add(&piece.on_support(&all)?);
    }
    let exact_op = heisenberg_evolve(&h, &a, t, &all)?.on_support(&all)?;
    let op_gap = sum.max_abs_diff(&exact_op);

    let rho = State::basis(&[false, true, false, false, true, false]);
    let pl = plan(&Default::default(), &g, 0, t, &PlanRequest::desk(3, tiling.num_boxes()))?;
    let sim = simulate_expectation(&h, &a, &rho, t, &pl, &SimOptions { bound: None, mutation })?;
    let exact = exact_expectation(&h, &a, &rho, t)?;
    let sim_gap = (sim.estimate - exact).abs();
    Ok(if mutation.is_some() { sim_gap } else { op_gap.max(sim_gap) })
}

fn completeness_suite(mutation: Option<Mutation>) -> Result<SuiteReport, RunError> {
    let ts = [0.1, 0.4, 0.7, 1.0];
    let mut worst = 0.0f64;
    for &t in &ts {
        worst = worst.max(completeness_gap(t, mutation)?);
    }
    Ok(SuiteReport { suite: Suite::Completeness, pass: worst <= COMPLETENESS_TOL, cases: ts.len(), worst_gap: worst })
}

fn parse_mutation(name: &str) -> Result<Mutation, RunError> {
    serde_json::from_value(serde_json::Value::String(name.into()))
        .map_err(|_| RunError::config(format!("unknown mutation `{name}`")))
}

pub fn run_suites(spec: &VerifySpec, seed: u64) -> Result<VerifyReport, RunError> {
    let mutation = spec.mutation.as_deref().map(parse_mutation).transpose()?;
    let mut suites = Vec::new();
    for &suite in &spec.suites {
        suites.push(match suite {
            Suite::Vanishing => vanishing_suite(seed)?,
            Suite::Identity => identity_suite(seed)?,
            Suite::ClusterCounts => cluster_count_suite()?,
            Suite::Completeness => completeness_suite(mutation)?,
        });
    }
    Ok(VerifyReport { pass: suites.iter().all(|s| s.pass), mutation: spec.mutation.clone(), suites })
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let spec = cfg.verify.clone().unwrap_or_default();
    let report = run_suites(&spec, cfg.seed())?;
    let mut out = Outcome::default();
    for s in report.suites.iter().filter(|s| !s.pass) {
        out.warnings.push(format!("suite {:?} failed (worst gap {:e})", s.suite, s.worst_gap));
    }
    if !report.pass {
        out.failure = Some(RunError::Failed("verification suites failed".into()));
    }
    out.documents.push(("verify.json".into(), serde_json::to_value(&report).map_err(RunError::io)?));
    Ok(out)
}
