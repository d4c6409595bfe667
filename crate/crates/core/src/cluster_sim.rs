//! Cluster-expansion estimate of `Tr[ρ A(t)]` over connected sets of boxes.
//!
//! The lattice is tiled with boxes of side `r`. For each connected box set
//! `S` containing the anchor box, `ã(S)` is the expectation of `A` evolved
//! with only the terms inside `S`, and the inclusion-exclusion recursion
//! `a(S) = ã(S) − Σ a(S′)` isolates the part of `A(t)` that needs all of `S`.
//! Summing `a(S)` over `|S| ≤ m*` gives the estimate.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{truncation_error_bound, BoundParams, ConstantsMode};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_clusters_up_to, is_connected, tile_boxes, BoxTiling, Cluster, FactorGraph, DEFAULT_CLUSTER_CAP};
use crate::operators::{expectation_on, heisenberg_evolve, HamiltonianSpec, LocalOperator, MarginalProvider, Propagator};
use crate::scalar::Real;

/// Largest number of qubits in a single cluster evaluation.
pub const DEFAULT_CLUSTER_QUBITS: usize = 20;

/// Largest cluster whose sub-clusters are enumerated for the correction.
const MAX_CORRECTION_BOXES: usize = 24;

/// What the caller fixes when building a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    #[serde(default)]
    pub mode: ConstantsMode,
    /// Box side; required in desk mode.
    #[serde(default)]
    pub r: Option<usize>,
    /// Truncation order; required in desk mode.
    #[serde(default)]
    pub m_star: Option<usize>,
    pub epsilon: f64,
}

impl PlanRequest {
    pub fn desk(r: usize, m_star: usize) -> Self {
        PlanRequest { mode: ConstantsMode::Desk, r: Some(r), m_star: Some(m_star), epsilon: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimPlan {
    pub r: usize,
    pub m_star: usize,
    pub epsilon: f64,
    pub mode: ConstantsMode,
    pub tiling: BoxTiling,
    pub max_cluster_qubits: usize,
    pub warnings: Vec<String>,
}

impl SimPlan {
    pub fn anchor(&self) -> usize {
        self.tiling.anchor()
    }
}

/// `⌈4(v_LR |t| + c_box)⌉`.
pub fn formula_box_side(p: &BoundParams, t: f64) -> usize {
    (4.0 * (p.v_lr * t.abs() + p.c_box)).ceil().max(1.0) as usize
}

/// `⌊(3^{d+2}/(μr)) ln(2c_d/ε)⌋ + 3^{d+2} + 1`, with the floor clamped at 0.
pub fn truncation_order(dimension: usize, mu: f64, r: usize, c_d: f64, epsilon: f64) -> usize {
    let k = 3f64.powi(dimension as i32 + 2);
    let lead = (k / (mu * r as f64) * (2.0 * c_d / epsilon).ln()).floor().max(0.0);
    lead as usize + k as usize + 1
}

/// Chooses `r` and `m*` and tiles `g` around `anchor_vertex`.
pub fn plan(
    p: &BoundParams,
    g: &FactorGraph,
    anchor_vertex: usize,
    t: f64,
    req: &PlanRequest,
) -> Result<SimPlan> {
    if !(req.epsilon.is_finite() && req.epsilon > 0.0) {
        return Err(Error::Validity(format!("target error must be positive, got {}", req.epsilon)));
    }
    let mut warnings = Vec::new();
    let (mut r, m_star) = match req.mode {
        ConstantsMode::Desk => {
            let r = req.r.ok_or_else(|| Error::InvalidArgument("desk mode needs r".into()))?;
            let m = req.m_star.ok_or_else(|| Error::InvalidArgument("desk mode needs m_star".into()))?;
            (r, m)
        }
        ConstantsMode::PaperFormula => {
            p.validate()?;
            let q = p.clone().with_mode(ConstantsMode::PaperFormula);
            let r = formula_box_side(&q, t);
            (r, truncation_order(q.dimension, q.mu, r, q.c_d, req.epsilon))
        }
    };
    if r == 0 || m_star == 0 {
        return Err(Error::InvalidArgument("r and m_star must be at least 1".into()));
    }
    let coords = g
        .coordinates()
        .ok_or_else(|| Error::InvalidArgument("planning needs vertex coordinates".into()))?;
    let extent = (0..g.dimension())
        .map(|k| {
            let lo = coords.iter().map(|c| c[k]).min().unwrap_or(0);
            let hi = coords.iter().map(|c| c[k]).max().unwrap_or(0);
            (hi - lo + 1) as usize
        })
        .max()
        .unwrap_or(1);
    if r > extent {
        warnings.push(format!("box side {r} exceeds the lattice extent {extent}; clamped"));
        r = extent;
    }
    let tiling = tile_boxes(g, r, anchor_vertex)?;
    Ok(SimPlan {
        r,
        m_star,
        epsilon: req.epsilon,
        mode: req.mode,
        tiling,
        max_cluster_qubits: DEFAULT_CLUSTER_QUBITS,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterStatus {
    Evaluated,
    /// The cluster exceeded the qubit cap.
    Unevaluable,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterEntry<R: Real> {
    pub cluster: Cluster,
    /// `ã(S)`.
    pub raw: R,
    /// `a(S)`.
    pub value: R,
    pub status: ClusterStatus,
}

/// Cluster values by level; level `m` holds clusters of `m` boxes.
#[derive(Clone, Debug)]
pub struct ClusterTable<R: Real> {
    anchor: usize,
    adjacency: Vec<Vec<usize>>,
    levels: Vec<Vec<ClusterEntry<R>>>,
    index: BTreeMap<Cluster, (usize, usize)>,
}

impl<R: Real> ClusterTable<R> {
    pub fn new(tiling: &BoxTiling) -> Self {
        ClusterTable {
            anchor: tiling.anchor(),
            adjacency: tiling.adjacency().to_vec(),
            levels: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn levels(&self) -> &[Vec<ClusterEntry<R>>] {
        &self.levels
    }

    pub fn get(&self, c: &Cluster) -> Option<&ClusterEntry<R>> {
        self.index.get(c).map(|&(l, i)| &self.levels[l][i])
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Appends the next level. Entries must have `levels().len() + 1` boxes.
    pub fn commit_level(&mut self, entries: Vec<ClusterEntry<R>>) -> Result<()> {
        let size = self.levels.len() + 1;
        let level = self.levels.len();
        for (i, e) in entries.iter().enumerate() {
            if e.cluster.len() != size || !e.cluster.contains(self.anchor) {
                return Err(Error::InvalidArgument(format!(
                    "cluster {:?} does not belong to level {size}",
                    e.cluster.ids()
                )));
            }
            self.index.insert(e.cluster.clone(), (level, i));
        }
        self.levels.push(entries);
        Ok(())
    }

    /// `Σ a(S)` over evaluated clusters in canonical order.
    pub fn total(&self) -> R {
        self.levels
            .iter()
            .flatten()
            .filter(|e| e.status == ClusterStatus::Evaluated)
            .map(|e| e.value)
            .fold(R::zero(), |s, v| s + v)
    }
}

/// Connected proper sub-clusters of `s` that contain the anchor.
fn anchored_subclusters(adj: &[Vec<usize>], anchor: usize, s: &Cluster) -> Result<Vec<Cluster>> {
    if !s.contains(anchor) {
        return Err(Error::InvalidArgument(format!("cluster {:?} misses the anchor box", s.ids())));
    }
    let others: Vec<usize> = s.ids().iter().copied().filter(|&b| b != anchor).collect();
    if others.len() > MAX_CORRECTION_BOXES {
        return Err(Error::CapExceeded { what: "correction boxes", needed: others.len(), cap: MAX_CORRECTION_BOXES });
    }
    let full = (1usize << others.len()) - 1;
    let mut out = Vec::new();
    for mask in 0..full {
        let mut ids = vec![anchor];
        ids.extend(others.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &b)| b));
        ids.sort_unstable();
        if is_connected(adj, &ids) {
            out.push(Cluster::new(ids));
        }
    }
    out.sort();
    Ok(out)
}

fn correction_with_sign<R: Real>(table: &ClusterTable<R>, s: &Cluster, raw: R, sign: R) -> Result<R> {
    let mut acc = raw;
    for sub in anchored_subclusters(&table.adjacency, table.anchor, s)? {
        match table.get(&sub) {
            Some(e) if e.status == ClusterStatus::Evaluated => acc = acc + sign * e.value,
            _ => return Err(Error::MissingDependency(sub.ids().to_vec())),
        }
    }
    Ok(acc)
}

/// `a(S) = ã(S) − Σ a(S′)` over connected proper sub-clusters containing the
/// anchor, all of which must already be in `table`.
pub fn cluster_correction<R: Real>(table: &ClusterTable<R>, s: &Cluster, raw: R) -> Result<R> {
    correction_with_sign(table, s, raw, -R::one())
}

/// `ã(S) = Tr[ρ_S e^{iH_S t} A e^{−iH_S t}]`, `H_S` being the terms inside the
/// union of the boxes of `s`.
pub fn raw_cluster_expectation<R: Real, M: MarginalProvider<R> + ?Sized>(
    h: &HamiltonianSpec<R>,
    a: &LocalOperator<R>,
    marginals: &M,
    tiling: &BoxTiling,
    s: &Cluster,
    t: R,
) -> Result<R> {
    let verts = tiling.vertices_of(s);
    if let Some(&v) = a.support().iter().find(|v| verts.binary_search(v).is_err()) {
        return Err(Error::InvalidArgument(format!("observable site {v} lies outside the cluster")));
    }
    let prop = Propagator::new(h, &verts)?;
    let mut total = R::zero();
    for (p, psi) in marginals.ensemble(&verts)? {
        let phi = prop.evolve_state(&psi, t);
        total = total + p * expectation_on(a, &phi, &verts)?.re;
    }
    Ok(total)
}

/// Deliberate defects for exercising the verification harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Adds the sub-cluster values instead of subtracting them.
    FlipCorrectionSign,
}

#[derive(Clone, Debug, Default)]
pub struct SimOptions {
    /// When set, the diagnostics report the truncation-error bound.
    pub bound: Option<BoundParams>,
    pub mutation: Option<Mutation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub size: usize,
    pub clusters: usize,
    pub level_sum: f64,
    /// Estimate truncated at this level.
    pub cumulative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimDiagnostics {
    pub clusters_evaluated: usize,
    pub levels: Vec<LevelSummary>,
    pub truncation_bound: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SimOutcome<R: Real> {
    pub estimate: R,
    pub table: ClusterTable<R>,
    pub diagnostics: SimDiagnostics,
}

impl<R: Real> SimOutcome<R> {
    /// Estimate truncated at `m` boxes (`m ≥ 1`).
    pub fn estimate_at(&self, m: usize) -> Option<f64> {
        let last = self.diagnostics.levels.last()?;
        Some(self.diagnostics.levels.get(m.checked_sub(1)?).unwrap_or(last).cumulative)
    }
}

/// Runs the expansion level by level up to `plan.m_star` boxes.
pub fn simulate_expectation<R: Real, M: MarginalProvider<R> + ?Sized>(
    h: &HamiltonianSpec<R>,
    a: &LocalOperator<R>,
    marginals: &M,
    t: R,
    plan: &SimPlan,
    options: &SimOptions,
) -> Result<SimOutcome<R>> {
    let tiling = &plan.tiling;
    let anchor_box = tiling.members(tiling.anchor());
    if let Some(&v) = a.support().iter().find(|v| !anchor_box.contains(v)) {
        return Err(Error::InvalidArgument(format!("observable site {v} lies outside the anchor box")));
    }
    if marginals.num_sites() != h.num_sites() {
        return Err(Error::Shape("state and Hamiltonian sizes differ".into()));
    }
    let supports: Vec<Vec<usize>> = h.terms().iter().map(|x| x.support().to_vec()).collect();
    tiling.check_factors(&supports)?;

    let m_max = plan.m_star.min(tiling.num_boxes());
    let levels = enumerate_clusters_up_to(tiling.adjacency(), tiling.anchor(), m_max, DEFAULT_CLUSTER_CAP)?;
    let sign = match options.mutation {
        Some(Mutation::FlipCorrectionSign) => R::one(),
        None => -R::one(),
    };
    let mut table = ClusterTable::new(tiling);
    let mut summaries = Vec::with_capacity(levels.len());
    let mut cumulative = R::zero();
    for level in levels {
        let raws: Vec<Result<Option<R>>> = level
            .par_iter()
            .map(|s| {
                let qubits = tiling.vertices_of(s).len();
                if qubits > plan.max_cluster_qubits {
                    return Ok(None);
                }
                raw_cluster_expectation(h, a, marginals, tiling, s, t).map(Some)
            })
            .collect();
        let entries: Vec<ClusterEntry<R>> = level
            .par_iter()
            .zip(raws)
            .map(|(s, raw)| {
                Ok(match raw? {
                    Some(raw) => ClusterEntry {
                        cluster: s.clone(),
                        raw,
                        value: correction_with_sign(&table, s, raw, sign)?,
                        status: ClusterStatus::Evaluated,
                    },
                    None => ClusterEntry {
                        cluster: s.clone(),
                        raw: R::zero(),
                        value: R::zero(),
                        status: ClusterStatus::Unevaluable,
                    },
                })
            })
            .collect::<Result<_>>()?;
        if let Some(e) = entries.iter().find(|e| e.status == ClusterStatus::Unevaluable) {
            return Err(Error::CapExceeded {
                what: "cluster qubits",
                needed: tiling.vertices_of(&e.cluster).len(),
                cap: plan.max_cluster_qubits,
            });
        }
        let level_sum = entries.iter().map(|e| e.value).fold(R::zero(), |s, v| s + v);
        cumulative = cumulative + level_sum;
        summaries.push(LevelSummary {
            size: table.levels().len() + 1,
            clusters: entries.len(),
            level_sum: level_sum.as_f64(),
            cumulative: cumulative.as_f64(),
        });
        table.commit_level(entries)?;
    }

    let truncation_bound = match &options.bound {
        Some(p) => {
            let volume = plan.m_star * plan.r.pow(tiling.dimension() as u32);
            truncation_error_bound(p, t.as_f64(), volume, tiling.dimension()).ok()
        }
        None => None,
    };
    Ok(SimOutcome {
        estimate: cumulative,
        diagnostics: SimDiagnostics {
            clusters_evaluated: table.len(),
            levels: summaries,
            truncation_bound,
            warnings: plan.warnings.clone(),
        },
        table,
    })
}

/// Every `A(S; t)` with `|S| ≤ m_max`, each expressed on the vertices of `S`.
pub fn operator_expansion<R: Real>(
    h: &HamiltonianSpec<R>,
    a: &LocalOperator<R>,
    tiling: &BoxTiling,
    m_max: usize,
    t: R,
) -> Result<Vec<(Cluster, LocalOperator<R>)>> {
    let levels = enumerate_clusters_up_to(tiling.adjacency(), tiling.anchor(), m_max.min(tiling.num_boxes()), DEFAULT_CLUSTER_CAP)?;
    let mut pieces: BTreeMap<Cluster, LocalOperator<R>> = BTreeMap::new();
    let mut ordered = Vec::new();
    for s in levels.into_iter().flatten() {
        let verts = tiling.vertices_of(&s);
        let mut piece = heisenberg_evolve(h, a, t, &verts)?;
        for sub in anchored_subclusters(tiling.adjacency(), tiling.anchor(), &s)? {
            let lower = pieces.get(&sub).ok_or_else(|| Error::MissingDependency(sub.ids().to_vec()))?;
            piece = piece.sub(&lower.on_support(&verts)?);
        }
        pieces.insert(s.clone(), piece.clone());
        ordered.push((s, piece));
    }
    Ok(ordered)
}

/// `A(S; t)` by the inclusion-exclusion recursion over sub-clusters.
pub fn operator_piece<R: Real>(
    h: &HamiltonianSpec<R>,
    a: &LocalOperator<R>,
    tiling: &BoxTiling,
    s: &Cluster,
    t: R,
) -> Result<LocalOperator<R>> {
    let sub_tiling_pieces = operator_expansion(h, a, tiling, s.len(), t)?;
    sub_tiling_pieces
        .into_iter()
        .find(|(c, _)| c == s)
        .map(|(_, p)| p)
        .ok_or_else(|| Error::InvalidArgument(format!("cluster {:?} is not a connected cluster of the anchor", s.ids())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::chain;
    use crate::operators::{build_named_hamiltonian, exact_expectation, ModelParams, Pauli, State};

    fn tfim(l: usize, g: f64) -> (FactorGraph, HamiltonianSpec<f64>) {
        let graph = chain(l).unwrap();
        let p: ModelParams = [("J".to_string(), 1.0), ("g".to_string(), g)].into();
        let h = build_named_hamiltonian("tfim", &graph, &p).unwrap();
        (graph, h)
    }

    #[test]
    fn truncation_order_examples() {
        let eps = 2.0 * (-4f64).exp();
        assert_eq!(truncation_order(1, 1.0, 4, 1.0, eps), 55);
        assert_eq!(truncation_order(1, 1.0, 4, 1.0, 2.0), 28);
        assert_eq!(truncation_order(1, 1.0, 4, 1.0, 10.0), 28);
    }

    #[test]
    fn plan_modes() {
        let (g, _) = tfim(8, 1.0);
        let p = BoundParams::default();
        let desk = plan(&p, &g, 0, 0.5, &PlanRequest::desk(2, 3)).unwrap();
        assert_eq!((desk.r, desk.m_star, desk.tiling.num_boxes()), (2, 3, 4));
        let bad = PlanRequest { epsilon: 0.0, ..PlanRequest::desk(2, 3) };
        assert!(plan(&p, &g, 0, 0.5, &bad).unwrap_err().is_validity());
        let paper = PlanRequest { mode: ConstantsMode::PaperFormula, r: None, m_star: None, epsilon: 1e-3 };
        let pl = plan(&p, &g, 0, 2.0, &paper).unwrap();
        assert_eq!(pl.tiling.num_boxes(), 1);
        assert!(!pl.warnings.is_empty());
    }

    #[test]
    fn corrections_follow_subclusters() {
        let (g, _) = tfim(6, 1.0);
        let tiling = tile_boxes(&g, 2, 0).unwrap();
        let subs = anchored_subclusters(tiling.adjacency(), 0, &Cluster::new(vec![0, 1, 2])).unwrap();
        assert_eq!(subs, vec![Cluster::new(vec![0]), Cluster::new(vec![0, 1])]);
        let mut table = ClusterTable::<f64>::new(&tiling);
        let entry = |ids: Vec<usize>, raw: f64, value: f64| ClusterEntry {
            cluster: Cluster::new(ids),
            raw,
            value,
            status: ClusterStatus::Evaluated,
        };
        assert_eq!(cluster_correction(&table, &Cluster::new(vec![0]), 0.7).unwrap(), 0.7);
        assert!(matches!(
            cluster_correction(&table, &Cluster::new(vec![0, 1]), 0.7),
            Err(Error::MissingDependency(_))
        ));
        table.commit_level(vec![entry(vec![0], 0.7, 0.7)]).unwrap();
        table.commit_level(vec![entry(vec![0, 1], 0.9, 0.2)]).unwrap();
        let v = cluster_correction(&table, &Cluster::new(vec![0, 1, 2]), 1.0).unwrap();
        assert!((v - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rabi_cluster() {
        let g = FactorGraph::new(1, vec![], 1).unwrap().with_coordinates(vec![vec![0]]).unwrap();
        let h = HamiltonianSpec::new(1, vec![LocalOperator::pauli(Pauli::X, 0)]).unwrap();
        let tiling = tile_boxes(&g, 1, 0).unwrap();
        let rho = State::<f64>::all_zero(1);
        let z = LocalOperator::pauli(Pauli::Z, 0);
        for &t in &[0.0, 0.4, 1.3] {
            let v = raw_cluster_expectation(&h, &z, &rho, &tiling, &Cluster::new(vec![0]), t).unwrap();
            assert!((v - (2.0 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn full_expansion_is_exact() {
        let (g, h) = tfim(8, 0.9);
        let rho = State::<f64>::all_zero(8);
        let z = LocalOperator::pauli(Pauli::Z, 0);
        let pl = plan(&BoundParams::default(), &g, 0, 0.7, &PlanRequest::desk(2, 4)).unwrap();
        let out = simulate_expectation(&h, &z, &rho, 0.7, &pl, &SimOptions::default()).unwrap();
        let exact = exact_expectation(&h, &z, &rho, 0.7).unwrap();
        assert!((out.estimate - exact).abs() < 1e-10);
        assert_eq!(out.diagnostics.clusters_evaluated, 4);

        let zero = simulate_expectation(&h, &z, &rho, 0.0, &pl, &SimOptions::default()).unwrap();
        assert!((zero.estimate - 1.0).abs() < 1e-12);
        for e in zero.table.levels().iter().skip(1).flatten() {
            assert!(e.value.abs() < 1e-12);
        }
    }

    #[test]
    fn observable_must_sit_in_anchor_box() {
        let (g, h) = tfim(6, 1.0);
        let pl = plan(&BoundParams::default(), &g, 0, 0.5, &PlanRequest::desk(2, 2)).unwrap();
        let rho = State::<f64>::all_zero(6);
        let z3 = LocalOperator::pauli(Pauli::Z, 3);
        assert!(simulate_expectation(&h, &z3, &rho, 0.5, &pl, &SimOptions::default()).is_err());
    }

    #[test]
    fn piece_base_case_and_zero_time() {
        let (g, h) = tfim(6, 0.8);
        let tiling = tile_boxes(&g, 2, 0).unwrap();
        let z = LocalOperator::pauli(Pauli::Z, 0);
        let base = operator_piece(&h, &z, &tiling, &Cluster::new(vec![0]), 0.4).unwrap();
        let direct = heisenberg_evolve(&h, &z, 0.4, &[0, 1]).unwrap();
        assert!(base.max_abs_diff(&direct) < 1e-13);
        let zero = operator_piece(&h, &z, &tiling, &Cluster::new(vec![0, 1]), 0.0).unwrap();
        assert!(zero.norm() < 1e-13);
    }
}
