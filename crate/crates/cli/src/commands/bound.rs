use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use clusterlr::bounds::{
    combinatorial_bound, evaluate_dominance, matrix_exp_bound, path_sum_bound_for, quasilocal_nested_bound,
    quasilocal_pair_bound, random_instance, standard_lr_bound, truncation_error_bound, volume_bound,
    BoundParams, DominanceModel, DominanceRow,
};
use clusterlr::lattice::{build_rectangular_lattice, chain, FactorGraph};
use clusterlr::operators::{nested_commutator_norm, DEFAULT_EVOLVE_CAP};
use clusterlr::Hamiltonian;

use crate::config::{pauli_string, InstanceSpec, RunConfig, Sweep, Values};
use crate::output::{num, opt, Table};
use crate::{Outcome, RunError};

pub const BOUND_HEADER: [&str; 7] = ["bound", "instance", "R", "t", "value", "valid", "exact"];

struct Point {
    bound: &'static str,
    instance: String,
    r: f64,
    t: f64,
    value: Result<f64, clusterlr::Error>,
    exact: Option<f64>,
}

impl Point {
    fn new(bound: &'static str, r: f64, t: f64, value: clusterlr::Result<f64>) -> Self {
        Point { bound, instance: String::new(), r, t, value, exact: None }
    }
}

fn grid2(a: &Values, b: &Values) -> Result<Vec<(f64, f64)>, RunError> {
    let (a, b) = (a.expand()?, b.expand()?);
    Ok(a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect())
}

fn as_count(x: f64, what: &str) -> Result<usize, RunError> {
    if x >= 0.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(RunError::config(format!("{what} must be a non-negative integer, got {x}")))
    }
}

fn min_distance(h: &Hamiltonian, r: &[usize], s_list: &[Vec<usize>]) -> clusterlr::Result<usize> {
    let g = h.interaction_graph(None)?;
    let mut best = usize::MAX;
    for s in s_list {
        best = best.min(g.factor_distance(r, s)?);
    }
    Ok(best)
}

fn instance_oracle(cfg: &RunConfig, inst: &InstanceSpec, h: &Hamiltonian, t: f64) -> Result<Option<f64>, RunError> {
    let (Some(a), Some(probes)) = (&inst.a, &inst.probes) else { return Ok(None) };
    if !cfg.oracle || h.num_sites() > DEFAULT_EVOLVE_CAP {
        return Ok(None);
    }
    let a = pauli_string(a)?;
    let probes = probes.iter().map(|p| pauli_string(p)).collect::<Result<Vec<_>, _>>()?;
    let all: Vec<usize> = (0..h.num_sites()).collect();
    Ok(Some(nested_commutator_norm(h, &a, &probes, t, &all)?))
}

fn sweep_points(cfg: &RunConfig, p: &BoundParams, sweep: &Sweep) -> Result<Vec<Point>, RunError> {
    let d = p.dimension;
    let mut pts = Vec::new();
    match sweep {
        Sweep::Combinatorial { regions, t } => {
            let r = regions.iter().map(|x| x.2).min().unwrap_or(0) as f64;
            for t in t.expand()? {
                pts.push(Point::new("combinatorial", r, t, combinatorial_bound(p, regions, t)));
            }
        }
        Sweep::Volume { radius, t } => {
            for (r, t) in grid2(radius, t)? {
                pts.push(Point::new("volume", r, t, volume_bound(p, r, t, d)));
            }
        }
        Sweep::StandardLr { d_r, d_s, dist, t } => {
            for (r, t) in grid2(dist, t)? {
                let k = as_count(r, "dist")?;
                pts.push(Point::new("standard_lr", r, t, standard_lr_bound(p, *d_r, *d_s, k, t)));
            }
        }
        Sweep::QuasilocalPair { d_b, d_s, dist, t } => {
            for (r, t) in grid2(dist, t)? {
                let k = as_count(r, "dist")?;
                pts.push(Point::new("quasilocal_pair", r, t, quasilocal_pair_bound(p, *d_b, *d_s, k, t)));
            }
        }
        Sweep::QuasilocalNested { regions, t } => {
            let r = regions.iter().map(|x| x.2).min().unwrap_or(0) as f64;
            for t in t.expand()? {
                pts.push(Point::new("quasilocal_nested", r, t, quasilocal_nested_bound(p, regions, t)));
            }
        }
        Sweep::Truncation { volume, t } => {
            for (m, t) in grid2(volume, t)? {
                let k = as_count(m, "volume")?;
                pts.push(Point::new("truncation", m, t, truncation_error_bound(p, t, k, d)));
            }
        }
        Sweep::PathSum { instance, t } | Sweep::MatrixExp { instance, t } => {
            let (_, h) = instance.model.build()?;
            let r = min_distance(&h, &instance.r, &instance.s)? as f64;
            let pairs: Vec<(Vec<usize>, Vec<usize>)> =
                instance.b.iter().cloned().zip(instance.s.iter().cloned()).collect();
            for t in t.expand()? {
                let (name, value) = match sweep {
                    Sweep::PathSum { .. } => {
                        ("path_sum", path_sum_bound_for(&h, &instance.r, &instance.s, &instance.b, t))
                    }
                    _ => ("matrix_exp", matrix_exp_bound(&h, &pairs, t)),
                };
                let mut pt = Point::new(name, r, t, value);
                pt.exact = instance_oracle(cfg, instance, &h, t)?;
                pts.push(pt);
            }
        }
        Sweep::Dominance { instances, max_qubits } => {
            for row in dominance_rows(*instances, *max_qubits, cfg.seed())? {
                let r = row.r_min as f64;
                let mut a = Point::new("dominance_path_sum", r, row.t, Ok(row.path_sum));
                a.instance = row.label.clone();
                a.exact = Some(row.exact);
                let value = row
                    .combinatorial
                    .ok_or_else(|| clusterlr::Error::Validity("outside the combinatorial window".into()));
                let mut b = Point::new("dominance_combinatorial", r, row.t, value);
                b.instance = row.label.clone();
                b.exact = Some(row.exact);
                pts.push(a);
                pts.push(b);
            }
        }
    }
    Ok(pts)
}

/// Graphs the dominance workload draws from, smallest first.
fn dominance_graphs(max_qubits: usize) -> Result<(Vec<FactorGraph>, Vec<FactorGraph>), RunError> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut add = |g: FactorGraph| {
        let n = g.num_vertices();
        if n <= max_qubits {
            if n >= 10 { large.push(g) } else { small.push(g) }
        }
    };
    for l in 4..=10 {
        add(chain(l)?);
    }
    for sides in [[2, 2], [2, 3], [2, 4], [3, 3], [2, 5]] {
        add(build_rectangular_lattice(&sides, 1)?);
    }
    Ok((small, large))
}

/// Every 40th instance uses a 10-site graph when `max_qubits` allows it.
const LARGE_EVERY: usize = 40;

/// Random paired oracle/bound evaluations; instance `k` is seeded with
/// `seed + k`, so the rows do not depend on the worker count.
pub fn dominance_rows(instances: usize, max_qubits: usize, seed: u64) -> Result<Vec<DominanceRow>, RunError> {
    if max_qubits > DEFAULT_EVOLVE_CAP {
        return Err(RunError::config(format!("max_qubits is capped at {DEFAULT_EVOLVE_CAP}")));
    }
    let (small, large) = dominance_graphs(max_qubits)?;
    if small.is_empty() {
        return Err(RunError::config("max_qubits must be at least 4"));
    }
    let rows: Vec<clusterlr::Result<DominanceRow>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let g = if k % LARGE_EVERY == LARGE_EVERY - 1 && !large.is_empty() {
                &large[(k / LARGE_EVERY) % large.len()]
            } else {
                &small[k % small.len()]
            };
            let model = if (k + k / small.len()) % 2 == 0 { DominanceModel::Tfim } else { DominanceModel::Random2Local };
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let inst = random_instance(&mut rng, g, model, format!("i{k}"))?;
            evaluate_dominance(&inst)
        })
        .collect();
    Ok(rows.into_iter().collect::<clusterlr::Result<Vec<_>>>()?)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let p = cfg.bound_params();
    let mut table = Table::new(&BOUND_HEADER);
    let mut out = Outcome::default();
    for sweep in cfg.sweeps.as_ref().expect("checked") {
        for pt in sweep_points(cfg, &p, sweep)? {
            let (value, valid) = match pt.value {
                Ok(v) => (num(v), true),
                Err(e) if e.is_validity() => {
                    let w = format!("{}: {e}", pt.bound);
                    if !out.warnings.contains(&w) {
                        out.warnings.push(w);
                    }
                    (String::new(), false)
                }
                Err(e) => return Err(e.into()),
            };
            table.push(vec![
                pt.bound.to_string(),
                pt.instance,
                num(pt.r),
                num(pt.t),
                value,
                valid.to_string(),
                opt(pt.exact),
            ]);
        }
    }
    out.tables.push((cfg.outputs.results.clone(), table));
    Ok(out)
}
