use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{LocalOperator, Pauli};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_clusters_up_to, FactorGraph, DEFAULT_CLUSTER_CAP};
use crate::linalg::CMatrix;
use crate::scalar::{c_real, Real};

/// Coupling map for the named models.
pub type ModelParams = BTreeMap<String, f64>;

/// Quasilocal envelope `‖H_S‖ ≤ h·e^{−κ|S|}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Envelope {
    pub h: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug)]
pub struct Term<R: Real> {
    pub op: LocalOperator<R>,
    pub norm: R,
}

impl<R: Real> Term<R> {
    pub fn support(&self) -> &[usize] {
        self.op.support()
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianSpec<R: Real> {
    num_sites: usize,
    terms: Vec<Term<R>>,
    envelope: Option<Envelope>,
    lattice_degree: Option<usize>,
}

impl<R: Real> HamiltonianSpec<R> {
    /// Terms with equal support are summed into one; zero terms are dropped.
    pub fn new(num_sites: usize, ops: Vec<LocalOperator<R>>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<usize>, LocalOperator<R>> = BTreeMap::new();
        for op in ops {
            if op.support().is_empty() {
                // Constant shifts generate no dynamics.
                continue;
            }
            if let Some(&v) = op.support().iter().find(|&&v| v >= num_sites) {
                return Err(Error::UnknownVertex(v));
            }
            let defect = op.hermiticity_defect();
            if defect > R::tol() {
                return Err(Error::NotHermitian(defect.as_f64()));
            }
            merged
                .entry(op.support().to_vec())
                .and_modify(|acc| *acc = acc.add(&op))
                .or_insert(op);
        }
        let terms = merged
            .into_values()
            .filter_map(|op| {
                let norm = op.norm();
                (norm > R::tol()).then_some(Term { op, norm })
            })
            .collect();
        Ok(HamiltonianSpec { num_sites, terms, envelope: None, lattice_degree: None })
    }

    pub fn with_envelope(mut self, env: Envelope) -> Self {
        self.envelope = Some(env);
        self
    }

    pub fn with_lattice_degree(mut self, degree: usize) -> Self {
        self.lattice_degree = Some(degree);
        self
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn terms(&self) -> &[Term<R>] {
        &self.terms
    }

    pub fn envelope(&self) -> Option<Envelope> {
        self.envelope
    }

    pub fn lattice_degree(&self) -> Option<usize> {
        self.lattice_degree
    }

    pub fn max_norm(&self) -> R {
        self.terms.iter().map(|t| t.norm).fold(R::zero(), R::max)
    }

    /// Σ‖H_X‖, an upper bound on ‖H‖.
    pub fn norm_sum(&self) -> R {
        R::sum_of(self.terms.iter().map(|t| t.norm))
    }

    /// Terms whose support lies inside `region` (ascending).
    pub fn restricted_to(&self, region: &[usize]) -> Vec<&Term<R>> {
        self.terms
            .iter()
            .filter(|t| t.support().iter().all(|v| region.binary_search(v).is_ok()))
            .collect()
    }

    /// Norm of the term on exactly `support`, zero if absent.
    pub fn term_norm(&self, support: &[usize]) -> R {
        self.terms
            .iter()
            .find(|t| t.support() == support)
            .map_or(R::zero(), |t| t.norm)
    }

    /// Factor graph whose factors are the term supports. Coordinates and
    /// boundary type are copied from `base` when given.
    pub fn interaction_graph(&self, base: Option<&FactorGraph>) -> Result<FactorGraph> {
        let factors: Vec<Vec<usize>> = self.terms.iter().map(|t| t.support().to_vec()).collect();
        let dim = base.map_or(1, FactorGraph::dimension);
        let g = FactorGraph::new(self.num_sites, factors, dim)?;
        match base.and_then(|b| b.coordinates()) {
            Some(c) => g.with_coordinates(c.to_vec()),
            None => Ok(g),
        }
    }

    /// Dense matrix of `H` on the full register `0..num_sites`.
    pub fn dense(&self) -> CMatrix<R> {
        let all: Vec<usize> = (0..self.num_sites).collect();
        self.dense_on(&all)
    }

    /// Dense matrix of the terms contained in `region`, on `region`.
    pub fn dense_on(&self, region: &[usize]) -> CMatrix<R> {
        let dim = 1usize << region.len();
        let mut h = CMatrix::zeros(dim, dim);
        for t in self.restricted_to(region) {
            h.add_assign_scaled(&t.op.embed(region).expect("term inside region"), c_real(R::one()));
        }
        h
    }
}

fn param(params: &ModelParams, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key).copied().or(default) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::InvalidArgument(format!("parameter {key} = {v} is not finite"))),
        None => Err(Error::InvalidArgument(format!("missing parameter `{key}`"))),
    }
}

fn two_site<R: Real>(a: Pauli, b: Pauli, u: usize, v: usize, c: f64) -> Result<LocalOperator<R>> {
    Ok(LocalOperator::pauli_string(&[(u, a), (v, b)])?.scale_real(R::lit(c)))
}

fn pair_factors(g: &FactorGraph) -> Vec<(usize, usize)> {
    g.factors()
        .iter()
        .filter(|f| f.len() == 2)
        .map(|f| (f[0], f[1]))
        .collect()
}

/// Named models on the pair factors of `g`:
///
/// * `tfim`: `−J Σ Z_u Z_v − g Σ X_v` (params `J`, `g`)
/// * `heisenberg`: `J Σ (XX + YY + ZZ) + hz Σ Z_v` (params `J`, `hz`)
/// * `random2local`: every pair gets `Σ_ab J_ab σ^a σ^b` and every site
///   `Σ_a h_a σ^a`, coefficients uniform in `[−1, 1]·scale` (params `seed`,
///   `scale`)
/// * `quasilocal`: `h e^{−κ|S|} Z^{⊗S}` on every connected set with
///   `2 ≤ |S| ≤ s_max`, plus `field·h e^{−κ} X_v` (params `h`, `kappa`,
///   `s_max`, `field`)
pub fn build_named_hamiltonian<R: Real>(
    name: &str,
    g: &FactorGraph,
    params: &ModelParams,
) -> Result<HamiltonianSpec<R>> {
    let n = g.num_vertices();
    let mut ops: Vec<LocalOperator<R>> = Vec::new();
    let mut envelope = None;
    match name {
        "tfim" => {
            let j = param(params, "J", None)?;
            let field = param(params, "g", None)?;
            for (u, v) in pair_factors(g) {
                ops.push(two_site(Pauli::Z, Pauli::Z, u, v, -j)?);
            }
            for v in g.vertices() {
                ops.push(LocalOperator::pauli(Pauli::X, v).scale_real(R::lit(-field)));
            }
        }
        "heisenberg" => {
            let j = param(params, "J", None)?;
            let hz = param(params, "hz", Some(0.0))?;
            for (u, v) in pair_factors(g) {
                for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                    ops.push(two_site(p, p, u, v, j)?);
                }
            }
            for v in g.vertices() {
                ops.push(LocalOperator::pauli(Pauli::Z, v).scale_real(R::lit(hz)));
            }
        }
        "random2local" => {
            let seed = param(params, "seed", Some(0.0))?;
            let scale = param(params, "scale", Some(1.0))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
            for (u, v) in pair_factors(g) {
                for a in paulis {
                    for b in paulis {
                        let c = scale * rng.gen_range(-1.0..=1.0);
                        ops.push(two_site(a, b, u, v, c)?);
                    }
                }
            }
            for v in g.vertices() {
                for a in paulis {
                    let c = scale * rng.gen_range(-1.0..=1.0);
                    ops.push(LocalOperator::pauli(a, v).scale_real(R::lit(c)));
                }
            }
        }
        "quasilocal" => {
            let h = param(params, "h", None)?;
            let kappa = param(params, "kappa", None)?;
            let s_max = param(params, "s_max", None)?;
            let field = param(params, "field", Some(1.0))?;
            if s_max < 1.0 || h <= 0.0 {
                return Err(Error::InvalidArgument("quasilocal needs s_max >= 1 and h > 0".into()));
            }
            let s_max = s_max as usize;
            for root in g.vertices() {
                let levels = enumerate_clusters_up_to(g.adjacency(), root, s_max, DEFAULT_CLUSTER_CAP)?;
                for cluster in levels.iter().skip(1).flatten() {
                    // Count each set once, from its smallest vertex.
                    if cluster.ids()[0] != root {
                        continue;
                    }
                    let coeff = h * (-kappa * cluster.len() as f64).exp();
                    let string: Vec<(usize, Pauli)> =
                        cluster.ids().iter().map(|&v| (v, Pauli::Z)).collect();
                    ops.push(LocalOperator::pauli_string(&string)?.scale_real(R::lit(coeff)));
                }
            }
            let fcoeff = field.clamp(0.0, 1.0) * h * (-kappa).exp();
            for v in g.vertices() {
                ops.push(LocalOperator::pauli(Pauli::X, v).scale_real(R::lit(fcoeff)));
            }
            envelope = Some(Envelope { h, kappa });
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    }
    let mut spec = HamiltonianSpec::new(n, ops)?.with_lattice_degree(g.max_neighbor_count());
    if let Some(env) = envelope {
        spec = spec.with_envelope(env);
    }
    Ok(spec)
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasilocalReport {
    pub h: f64,
    pub kappa: f64,
    pub degree: usize,
    /// `1 + ln Δ`.
    pub kappa_threshold: f64,
    pub kappa_condition: bool,
    /// `(support, h e^{−κ|S|} − ‖H_S‖)` per term.
    pub slacks: Vec<(Vec<usize>, f64)>,
    /// Supports whose slack is negative beyond rounding.
    pub violations: Vec<Vec<usize>>,
    pub passed: bool,
}

/// Checks the envelope term by term and the condition `κ > 1 + ln Δ`.
pub fn check_quasilocal<R: Real>(hs: &HamiltonianSpec<R>) -> Result<QuasilocalReport> {
    let env = hs
        .envelope()
        .ok_or_else(|| Error::InvalidArgument("no quasilocal envelope declared".into()))?;
    let degree = match hs.lattice_degree() {
        Some(d) => d,
        None => hs.interaction_graph(None)?.max_neighbor_count(),
    };
    let threshold = 1.0 + (degree.max(1) as f64).ln();
    let mut slacks = Vec::with_capacity(hs.terms().len());
    let mut violations = Vec::new();
    for t in hs.terms() {
        let bound = env.h * (-env.kappa * t.support().len() as f64).exp();
        let slack = bound - t.norm.as_f64();
        if slack < -1e-12 * bound.max(1e-300) {
            violations.push(t.support().to_vec());
        }
        slacks.push((t.support().to_vec(), slack));
    }
    let kappa_condition = env.kappa > threshold;
    Ok(QuasilocalReport {
        h: env.h,
        kappa: env.kappa,
        degree,
        kappa_threshold: threshold,
        kappa_condition,
        passed: kappa_condition && violations.is_empty(),
        slacks,
        violations,
    })
}
