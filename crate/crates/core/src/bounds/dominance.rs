//! Paired oracle/bound evaluation on small instances.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{combinatorial_bound, path_sum_bound, BoundParams};
use crate::error::{Error, Result};
use crate::lattice::FactorGraph;
use crate::operators::{
    build_named_hamiltonian, nested_commutator_norm, HamiltonianSpec, LocalOperator, ModelParams, Pauli,
    DEFAULT_EVOLVE_CAP,
};

/// One nested-commutator problem: `A` in `r`, probe `O_i` in `S_i ⊆ B_i`,
/// and `r` the complement of the `B_i`.
#[derive(Clone, Debug)]
pub struct DominanceInstance {
    pub label: String,
    pub h: HamiltonianSpec<f64>,
    pub a: LocalOperator<f64>,
    pub probes: Vec<LocalOperator<f64>>,
    pub r: Vec<usize>,
    pub s_list: Vec<Vec<usize>>,
    pub b_list: Vec<Vec<usize>>,
    pub t: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DominanceRow {
    pub label: String,
    pub t: f64,
    pub exact: f64,
    pub path_sum: f64,
    /// `None` when `t` lies outside the combinatorial window.
    pub combinatorial: Option<f64>,
    /// Smallest `d(R, S_i)`.
    pub r_min: usize,
    pub window: f64,
}

impl DominanceRow {
    /// True when neither evaluated bound falls below the exact value
    /// (a relative slack of `1e-9` absorbs round-off in the oracle).
    pub fn dominated(&self) -> bool {
        let ok = |b: f64| self.exact <= b * (1.0 + 1e-9) + 1e-12;
        ok(self.path_sum) && self.combinatorial.map_or(true, ok)
    }
}

/// `(h, Δ)` of the factor graph of `h`: largest term norm and path degree.
pub fn combinatorial_constants(h: &HamiltonianSpec<f64>, g: &FactorGraph) -> (f64, usize) {
    (h.max_norm(), g.degree_bound())
}

/// Region triples `(|∂B_i|, |∂S_i|, d(R, S_i))` for [`combinatorial_bound`].
pub fn combinatorial_regions(
    g: &FactorGraph,
    r: &[usize],
    s_list: &[Vec<usize>],
    b_list: &[Vec<usize>],
) -> Result<Vec<(usize, usize, usize)>> {
    s_list
        .iter()
        .zip(b_list)
        .map(|(s, b)| {
            let db = g.boundary_of(b)?.len().max(1);
            let ds = g.boundary_of(s)?.len().max(1);
            Ok((db, ds, g.factor_distance(r, s)?))
        })
        .collect()
}

/// Evaluates the exact nested commutator on the whole system together with
/// the path-sum bound and, inside its window, the combinatorial bound.
pub fn evaluate_dominance(inst: &DominanceInstance) -> Result<DominanceRow> {
    let n = inst.h.num_sites();
    if n > DEFAULT_EVOLVE_CAP {
        return Err(Error::CapExceeded { what: "dominance oracle qubits", needed: n, cap: DEFAULT_EVOLVE_CAP });
    }
    let g = inst.h.interaction_graph(None)?;
    let all: Vec<usize> = (0..n).collect();
    let exact = nested_commutator_norm(&inst.h, &inst.a, &inst.probes, inst.t, &all)?;
    let weights: Vec<f64> = inst.h.terms().iter().map(|x| x.norm).collect();
    let path_sum = path_sum_bound(&g, &weights, &inst.r, &inst.s_list, &inst.b_list, inst.t)?;
    let (hmax, delta) = combinatorial_constants(&inst.h, &g);
    let regions = combinatorial_regions(&g, &inst.r, &inst.s_list, &inst.b_list)?;
    let r_min = regions.iter().map(|x| x.2).min().unwrap_or(0);
    let window = r_min as f64 / (2.0 * hmax * delta as f64);
    let p = BoundParams { h: hmax, delta, ..BoundParams::default() };
    let combinatorial = match combinatorial_bound(&p, &regions, inst.t) {
        Ok(v) => Some(v),
        Err(e) if e.is_validity() => None,
        Err(e) => return Err(e),
    };
    Ok(DominanceRow { label: inst.label.clone(), t: inst.t, exact, path_sum, combinatorial, r_min, window })
}

/// Model family for [`random_instance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DominanceModel {
    /// Transverse-field Ising with `J, g` drawn from `[0.5, 1.5]`.
    Tfim,
    /// Random two-local couplings with a fresh coupling seed.
    Random2Local,
}

fn random_pauli<G: Rng>(rng: &mut G, site: usize) -> LocalOperator<f64> {
    let p = *[Pauli::X, Pauli::Y, Pauli::Z].choose(rng).expect("nonempty");
    LocalOperator::pauli(p, site)
}

/// Draws targets, balls, probes and a time on `g`.
///
/// One or two single-vertex targets `S_i` get balls `B_i` of radius 0 or 1
/// (pairwise separated by at least one vertex), `R` is everything else and
/// `A` is a random Pauli on the vertex of `R` nearest to `S_1`. The time is
/// drawn from `[0.05, 1.6)` times the combinatorial window, so some
/// instances fall outside it and only exercise the path sum.
pub fn random_instance<G: Rng>(
    rng: &mut G,
    g: &FactorGraph,
    model: DominanceModel,
    label: String,
) -> Result<DominanceInstance> {
    let n = g.num_vertices();
    let params: ModelParams = match model {
        DominanceModel::Tfim => [
            ("J".to_string(), rng.gen_range(0.5..1.5)),
            ("g".to_string(), rng.gen_range(0.5..1.5)),
        ]
        .into(),
        DominanceModel::Random2Local => [
            ("seed".to_string(), rng.gen_range(0..1u32 << 20) as f64),
            ("scale".to_string(), rng.gen_range(0.2..0.6)),
        ]
        .into(),
    };
    let name = match model {
        DominanceModel::Tfim => "tfim",
        DominanceModel::Random2Local => "random2local",
    };
    let h = build_named_hamiltonian::<f64>(name, g, &params)?;

    for _ in 0..64 {
        let targets = if n >= 7 && rng.gen_bool(0.4) { 2 } else { 1 };
        let radius = rng.gen_range(0..=1usize);
        let mut s_list: Vec<Vec<usize>> = Vec::new();
        let mut b_list: Vec<Vec<usize>> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for &s in &order {
            if s_list.len() == targets {
                break;
            }
            let b = g.ball(s, radius)?;
            let separated = b_list
                .iter()
                .all(|other| g.factor_distance(other, &b).map_or(false, |d| d >= 2));
            if separated {
                s_list.push(vec![s]);
                b_list.push(b);
            }
        }
        if s_list.len() != targets {
            continue;
        }
        let covered: Vec<usize> = b_list.iter().flatten().copied().collect();
        let r: Vec<usize> = (0..n).filter(|v| !covered.contains(v)).collect();
        if r.is_empty() {
            continue;
        }
        let dist = g.distances_from(&s_list[0])?;
        let a_site = *r.iter().min_by_key(|&&v| (dist[v], v)).expect("nonempty");
        let a = random_pauli(rng, a_site);
        let probes = s_list.iter().map(|s| random_pauli(rng, s[0])).collect();

        let ig = h.interaction_graph(None)?;
        let (hmax, delta) = combinatorial_constants(&h, &ig);
        let r_min = s_list
            .iter()
            .map(|s| ig.factor_distance(&r, s))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min()
            .unwrap_or(1);
        let window = r_min as f64 / (2.0 * hmax * delta as f64);
        let t = rng.gen_range(0.05..1.6) * window;
        return Ok(DominanceInstance { label, h, a, probes, r, s_list, b_list, t });
    }
    Err(Error::InvalidArgument(format!("could not place separated targets on a {n}-vertex graph")))
}
