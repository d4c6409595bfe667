use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use clusterlr::lattice::{chain, FactorGraph};
use clusterlr::operators::{build_named_hamiltonian, LocalOperator, ModelParams, Pauli, DEFAULT_EVOLVE_CAP};
use clusterlr::ssb::{
    disorder_bound_compare, ghz_splitting, nested_identity_check, random_symmetric_hamiltonian,
    rk_disorder_parameter, DisorderPoint, DisorderRegion, IdentityCheck, RkState,
};
use clusterlr::stats::{linear_fit, LinearFit};

use crate::config::{RunConfig, SsbSpec};
use crate::output::{num, opt, Table};
use crate::{Outcome, RunError};

pub const IDENTITY_HEADER: [&str; 9] = ["instance", "n", "m", "t", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "gap"];
pub const GHZ_HEADER: [&str; 5] = ["L", "g", "even", "odd", "delta"];
pub const RK_HEADER: [&str; 6] = ["region", "vertices", "boundary_bonds", "value", "bound", "violated"];

#[derive(Clone, Debug)]
pub struct IdentityRow {
    pub instance: usize,
    pub n: usize,
    pub m: usize,
    pub t: f64,
    pub check: IdentityCheck,
}

/// Random symmetric evolutions with a random Pauli string `O` and distinct
/// sites `v_1..v_m`; instance `k` is seeded with `seed + k`.
pub fn identity_rows(
    instances: usize,
    max_sites: usize,
    max_order: usize,
    ts: &[f64],
    seed: u64,
) -> Result<Vec<IdentityRow>, RunError> {
    if max_sites == 0 || max_sites > DEFAULT_EVOLVE_CAP {
        return Err(RunError::config(format!("max_sites must lie in 1..={DEFAULT_EVOLVE_CAP}")));
    }
    if max_order == 0 {
        return Err(RunError::config("max_order must be at least 1"));
    }
    let per_instance: Vec<Result<Vec<IdentityRow>, clusterlr::Error>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let n = rng.gen_range(1..=max_sites);
            let m = rng.gen_range(1..=max_order.min(n));
            let h = random_symmetric_hamiltonian::<f64>(n, rng.gen())?;
            let width = rng.gen_range(1..=n.min(3));
            let factors: Vec<(usize, Pauli)> = sample(&mut rng, n, width)
                .into_iter()
                .map(|v| (v, [Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..3)]))
                .collect();
            let o = LocalOperator::pauli_string(&factors)?;
            let v_list = sample(&mut rng, n, m).into_vec();
            ts.iter()
                .map(|&t| {
                    let check = nested_identity_check(&h, t, &o, &v_list)?;
                    Ok(IdentityRow { instance: k, n, m, t, check })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_instance {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Ground-state splitting of the TFIM chain (`J = 1`) at field `g`.
pub fn ghz_rows(g: f64, lengths: &[usize]) -> Result<Vec<(usize, clusterlr::ssb::GhzSplitting)>, RunError> {
    let params: ModelParams = [("J".to_string(), 1.0), ("g".to_string(), g)].into();
    lengths
        .par_iter()
        .map(|&l| {
            let h = build_named_hamiltonian::<f64>("tfim", &chain(l)?, &params)?;
            Ok((l, ghz_splitting(&h)?))
        })
        .collect()
}

/// Vertices with coordinates inside the box `[0, sides_i)`.
pub fn rectangle(g: &FactorGraph, sides: &[usize]) -> Result<Vec<usize>, RunError> {
    let coords = g.coordinates().ok_or_else(|| RunError::config("lattice has no coordinates"))?;
    if sides.len() != g.dimension() {
        return Err(RunError::config(format!("region needs {} sides", g.dimension())));
    }
    Ok(g.vertices()
        .filter(|&v| coords[v].iter().zip(sides).all(|(&c, &s)| c >= 0 && (c as usize) < s))
        .collect())
}

#[derive(Serialize)]
struct FitDoc {
    fit: Option<LinearFit>,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let mut out = Outcome::default();
    match cfg.ssb.as_ref().expect("checked") {
        SsbSpec::Identity { instances, max_sites, max_order, t } => {
            let ts = t.expand()?;
            let mut table = Table::new(&IDENTITY_HEADER);
            for r in identity_rows(*instances, *max_sites, *max_order, &ts, cfg.seed())? {
                let c = r.check;
                table.push(vec![
                    r.instance.to_string(),
                    r.n.to_string(),
                    r.m.to_string(),
                    num(r.t),
                    num(c.lhs_re),
                    num(c.lhs_im),
                    num(c.rhs_re),
                    num(c.rhs_im),
                    num(c.gap),
                ]);
            }
            out.tables.push((cfg.outputs.results.clone(), table));
        }
        SsbSpec::Ghz { g, lengths } => {
            let rows = ghz_rows(*g, lengths)?;
            let mut table = Table::new(&GHZ_HEADER);
            for (l, s) in &rows {
                table.push(vec![l.to_string(), num(*g), num(s.even), num(s.odd), num(s.delta)]);
            }
            let positive: Vec<_> = rows.iter().filter(|(_, s)| s.delta > 0.0).collect();
            let xs: Vec<f64> = positive.iter().map(|(l, _)| *l as f64).collect();
            let ys: Vec<f64> = positive.iter().map(|(_, s)| s.delta.ln()).collect();
            let fit = linear_fit(&xs, &ys).ok();
            out.tables.push((cfg.outputs.results.clone(), table));
            out.documents.push(("ghz_fit.json".into(), serde_json::to_value(FitDoc { fit }).map_err(RunError::io)?));
        }
        SsbSpec::Rk { lattice, beta, regions, compare_t } => {
            let g = lattice.build()?;
            let d = g.dimension();
            let state = RkState::new(*beta, g)?;
            let mut points = Vec::new();
            let mut labels = Vec::new();
            for sides in regions {
                let vertices = rectangle(state.graph(), sides)?;
                let region = DisorderRegion::new(&state, vertices)?;
                let value = rk_disorder_parameter(&state, &region)?;
                let radius = *sides.iter().max().unwrap_or(&0) as f64 / 2.0;
                points.push(DisorderPoint { radius, boundary_bonds: region.boundary_bonds, value });
                let label = sides.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x");
                labels.push((label, region.vertices.len()));
            }
            let report = compare_t.map(|t| disorder_bound_compare(&points, &cfg.bound_params(), t, d));
            let mut table = Table::new(&RK_HEADER);
            for (k, (pt, (label, size))) in points.iter().zip(&labels).enumerate() {
                let row = report.as_ref().map(|r| r.rows[k]);
                table.push(vec![
                    label.clone(),
                    size.to_string(),
                    pt.boundary_bonds.to_string(),
                    num(pt.value),
                    opt(row.and_then(|r| r.bound)),
                    row.is_some_and(|r| r.violated).to_string(),
                ]);
            }
            out.tables.push((cfg.outputs.results.clone(), table));
            if let Some(report) = report {
                if report.violation {
                    out.warnings.push("measured disorder parameter exceeds the volume-law bound".into());
                }
                out.documents.push(("rk_report.json".into(), serde_json::to_value(&report).map_err(RunError::io)?));
            }
        }
    }
    Ok(out)
}
