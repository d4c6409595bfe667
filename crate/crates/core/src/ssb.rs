//! Small-system experiments on Z₂ symmetry breaking: the nested-commutator
//! identity for symmetric evolutions, the GHZ energy splitting, and the
//! disorder parameter of the Ising Rokhsar-Kivelson state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{volume_bound, BoundParams};
use crate::error::{Error, Result};
use crate::lattice::FactorGraph;
use crate::linalg::CMatrix;
use crate::operators::{heisenberg_evolve, HamiltonianSpec, LocalOperator, Pauli, Propagator, DEFAULT_EVOLVE_CAP};
use crate::scalar::{Real, C};
use crate::stats::{linear_fit, LinearFit};

/// Largest lattice whose configurations are enumerated.
pub const RK_ENUMERATION_CAP: usize = 20;

/// Largest register for the state-vector evaluation of the RK state.
pub const RK_DIRECT_CAP: usize = 16;

/// Largest chain handled by sector diagonalization.
pub const GHZ_CAP: usize = 12;

fn zero<R: Real>() -> C<R> {
    C::new(R::zero(), R::zero())
}

/// `max |H_{ab} − H_{ā b̄}|`, which vanishes iff `H` commutes with `∏ X_i`.
pub fn parity_defect<R: Real>(h: &CMatrix<R>) -> R {
    let full = h.rows() - 1;
    let mut worst = R::zero();
    for a in 0..h.rows() {
        for b in 0..h.cols() {
            worst = worst.max((h[(a, b)] - h[(a ^ full, b ^ full)]).norm());
        }
    }
    worst
}

fn check_symmetric<R: Real>(dense: &CMatrix<R>) -> Result<()> {
    let defect = parity_defect(dense);
    let scale = R::one().max(dense.max_abs());
    if defect > R::lit(1e-10) * scale {
        return Err(Error::Symmetry(format!(
            "Hamiltonian breaks the global spin-flip symmetry (defect {:.3e})",
            defect.as_f64()
        )));
    }
    Ok(())
}

/// Random Hamiltonian on `n` qubits built from parity-even terms:
/// `X_i`, and `X X`, `Y Y`, `Z Z`, `Y Z`, `Z Y` on every pair.
pub fn random_symmetric_hamiltonian<R: Real>(n: usize, seed: u64) -> Result<HamiltonianSpec<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops = Vec::new();
    for i in 0..n {
        ops.push(LocalOperator::pauli(Pauli::X, i).scale_real(R::lit(rng.gen_range(-1.0..1.0))));
    }
    let pairs = [
        (Pauli::X, Pauli::X),
        (Pauli::Y, Pauli::Y),
        (Pauli::Z, Pauli::Z),
        (Pauli::Y, Pauli::Z),
        (Pauli::Z, Pauli::Y),
    ];
    for i in 0..n {
        for j in i + 1..n {
            for &(p, q) in &pairs {
                let c = R::lit(rng.gen_range(-1.0..1.0));
                ops.push(LocalOperator::pauli_string(&[(i, p), (j, q)])?.scale_real(c));
            }
        }
    }
    HamiltonianSpec::new(n, ops)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityCheck {
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    pub gap: f64,
}

/// Both sides of `⟨ψ|D O|ψ⟩ = 2^{−m} ⟨0|D [[O(t), Z_{v_1}], …, Z_{v_m}]|0⟩`
/// with `|ψ⟩ = e^{−iHt}|0…0⟩` and `D = ∏ X_i`.
///
/// The left side is computed by evolving the state, the right side by
/// evolving the operator.
pub fn nested_identity_check<R: Real>(
    h: &HamiltonianSpec<R>,
    t: R,
    o: &LocalOperator<R>,
    v_list: &[usize],
) -> Result<IdentityCheck> {
    let n = h.num_sites();
    if n > DEFAULT_EVOLVE_CAP {
        return Err(Error::CapExceeded { what: "identity-check qubits", needed: n, cap: DEFAULT_EVOLVE_CAP });
    }
    if let Some(&v) = v_list.iter().find(|&&v| v >= n) {
        return Err(Error::UnknownVertex(v));
    }
    let all: Vec<usize> = (0..n).collect();
    check_symmetric(&h.dense())?;
    let full = (1usize << n) - 1;

    let mut psi = vec![zero::<R>(); 1 << n];
    psi[0] = C::new(R::one(), R::zero());
    let psi = Propagator::new(h, &all)?.evolve_state(&psi, t);
    let o_psi = o.embed(&all)?.matvec(&psi);
    let lhs = (0..psi.len()).fold(zero::<R>(), |s, i| s + psi[i].conj() * o_psi[i ^ full]);

    let mut m = heisenberg_evolve(h, o, t, &all)?.embed(&all)?;
    for &v in v_list {
        m = m.commutator(&LocalOperator::pauli(Pauli::Z, v).embed(&all)?);
    }
    let rhs = m[(full, 0)] / C::new(R::lit(2.0).powi(v_list.len() as i32), R::zero());
    Ok(IdentityCheck {
        lhs_re: lhs.re.as_f64(),
        lhs_im: lhs.im.as_f64(),
        rhs_re: rhs.re.as_f64(),
        rhs_im: rhs.im.as_f64(),
        gap: (lhs - rhs).norm().as_f64(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GhzSplitting {
    /// Lowest energy with `∏X = +1`.
    pub even: f64,
    /// Lowest energy with `∏X = −1`.
    pub odd: f64,
    pub delta: f64,
}

/// Splitting between the lowest levels of the two parity sectors.
pub fn ghz_splitting<R: Real>(h: &HamiltonianSpec<R>) -> Result<GhzSplitting> {
    let n = h.num_sites();
    if n == 0 {
        return Err(Error::InvalidArgument("GHZ splitting needs at least one site".into()));
    }
    if n > GHZ_CAP {
        return Err(Error::CapExceeded { what: "GHZ splitting qubits", needed: n, cap: GHZ_CAP });
    }
    let dense = h.dense();
    check_symmetric(&dense)?;
    let full = (1usize << n) - 1;
    // Representatives with the most significant bit clear; |s±⟩ = (|s⟩ ± |s̄⟩)/√2.
    let half = 1usize << (n - 1);
    let sector = |sign: R| {
        let block = CMatrix::from_fn(half, half, |a, b| dense[(a, b)] + dense[(a, b ^ full)] * C::new(sign, R::zero()));
        block.eigvalsh()[0].as_f64()
    };
    let even = sector(R::one());
    let odd = sector(-R::one());
    Ok(GhzSplitting { even, odd, delta: (even - odd).abs() })
}

/// `∏_{⟨ij⟩} e^{β Z_i Z_j / 2} |+…+⟩`, normalised.
#[derive(Clone, Debug)]
pub struct RkState {
    beta: f64,
    graph: FactorGraph,
    bonds: Vec<(usize, usize)>,
}

impl RkState {
    /// Bonds are the two-site factors of `graph`.
    pub fn new(beta: f64, graph: FactorGraph) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidArgument(format!("β must be finite and non-negative, got {beta}")));
        }
        let bonds = graph.factors().iter().filter(|f| f.len() == 2).map(|f| (f[0], f[1])).collect();
        Ok(RkState { beta, graph, bonds })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn num_sites(&self) -> usize {
        self.graph.num_vertices()
    }
}

/// Flipped region of the disorder operator `∏_{i∈R} X_i`.
#[derive(Clone, Debug, Serialize)]
pub struct DisorderRegion {
    pub vertices: Vec<usize>,
    pub boundary_bonds: usize,
}

impl DisorderRegion {
    pub fn new(state: &RkState, mut vertices: Vec<usize>) -> Result<Self> {
        vertices.sort_unstable();
        vertices.dedup();
        if let Some(&v) = vertices.iter().find(|&&v| v >= state.num_sites()) {
            return Err(Error::UnknownVertex(v));
        }
        let boundary_bonds = state.graph.crossing_bonds(&vertices);
        Ok(DisorderRegion { vertices, boundary_bonds })
    }

    /// Graph ball of `radius` around `center`.
    pub fn ball(state: &RkState, center: usize, radius: usize) -> Result<Self> {
        Self::new(state, state.graph.ball(center, radius)?)
    }

    fn mask(&self) -> Vec<bool> {
        let n = self.vertices.last().map_or(0, |&v| v + 1);
        let mut m = vec![false; n];
        for &v in &self.vertices {
            m[v] = true;
        }
        m
    }
}

fn spin(config: usize, n: usize, site: usize) -> f64 {
    if config >> (n - 1 - site) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `⟨e^{−β Σ_{∂R} s_i s_j}⟩` under the Ising weight `e^{β Σ s_i s_j}`, by
/// summing over all configurations.
pub fn rk_disorder_enumerate(state: &RkState, region: &DisorderRegion) -> Result<f64> {
    let n = state.num_sites();
    if n > RK_ENUMERATION_CAP {
        return Err(Error::CapExceeded { what: "enumerated spins", needed: n, cap: RK_ENUMERATION_CAP });
    }
    let inside = region.mask();
    let is_in = |v: usize| inside.get(v).copied().unwrap_or(false);
    let crossing: Vec<bool> = state.bonds.iter().map(|&(i, j)| is_in(i) != is_in(j)).collect();
    let shift = state.bonds.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for config in 0..1usize << n {
        let (mut energy, mut edge) = (0.0, 0.0);
        for (k, &(i, j)) in state.bonds.iter().enumerate() {
            let ss = spin(config, n, i) * spin(config, n, j);
            energy += ss;
            if crossing[k] {
                edge += ss;
            }
        }
        let w = (state.beta * (energy - shift)).exp();
        den += w;
        num += w * (-state.beta * edge).exp();
    }
    Ok(num / den)
}

/// Same quantity by transfer matrices; `state` must be a chain or ring with
/// bonds `(i, i+1)`.
pub fn rk_disorder_transfer(state: &RkState, region: &DisorderRegion) -> Result<f64> {
    let n = state.num_sites();
    let mut chain_bonds = 0;
    let mut ring = false;
    for &(i, j) in &state.bonds {
        if j == i + 1 {
            chain_bonds += 1;
        } else if i == 0 && j == n - 1 && n > 2 {
            ring = true;
        } else {
            return Err(Error::InvalidArgument("transfer matrices need a chain or ring".into()));
        }
    }
    if chain_bonds != n.saturating_sub(1) {
        return Err(Error::InvalidArgument("transfer matrices need a chain or ring".into()));
    }
    let inside = region.mask();
    let is_in = |v: usize| inside.get(v).copied().unwrap_or(false);
    let (b, a) = (state.beta.exp(), (-state.beta).exp());
    let weight = [[b, a], [a, b]];
    let ones = [[1.0, 1.0], [1.0, 1.0]];
    let bond_count = if ring { n } else { n - 1 };

    // Returns ln Tr ∏ M_k (ring) or ln 1ᵀ ∏ M_k 1 (chain).
    let run = |flip: bool| -> f64 {
        let mut log_scale = 0.0;
        let mut acc = [[1.0, 0.0], [0.0, 1.0]];
        for k in 0..bond_count {
            let (i, j) = (k, (k + 1) % n);
            let m = if flip && is_in(i) != is_in(j) { &ones } else { &weight };
            let mut next = [[0.0; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    next[r][c] = acc[r][0] * m[0][c] + acc[r][1] * m[1][c];
                }
            }
            let top = next.iter().flatten().fold(0.0f64, |x, &y| x.max(y));
            for v in next.iter_mut().flatten() {
                *v /= top;
            }
            log_scale += top.ln();
            acc = next;
        }
        let closing = if ring { acc[0][0] + acc[1][1] } else { acc.iter().flatten().sum() };
        log_scale + closing.ln()
    };
    Ok((run(true) - run(false)).exp())
}

/// `⟨ψ(β)| ∏_{i∈R} X_i |ψ(β)⟩` on the explicit state vector.
pub fn rk_disorder_direct(state: &RkState, region: &DisorderRegion) -> Result<f64> {
    let n = state.num_sites();
    if n > RK_DIRECT_CAP {
        return Err(Error::CapExceeded { what: "RK state-vector qubits", needed: n, cap: RK_DIRECT_CAP });
    }
    let dim = 1usize << n;
    let mut psi = vec![1.0 / (dim as f64).sqrt(); dim];
    for &(i, j) in &state.bonds {
        for (config, amp) in psi.iter_mut().enumerate() {
            *amp *= (0.5 * state.beta * spin(config, n, i) * spin(config, n, j)).exp();
        }
    }
    let norm: f64 = psi.iter().map(|a| a * a).sum();
    let mut flipped = psi.clone();
    for &v in &region.vertices {
        let bit = 1usize << (n - 1 - v);
        for config in 0..dim {
            if config & bit == 0 {
                flipped.swap(config, config | bit);
            }
        }
    }
    Ok(psi.iter().zip(&flipped).map(|(a, b)| a * b).sum::<f64>() / norm)
}

/// Exact disorder parameter: enumeration when small, transfer matrices for
/// long chains.
pub fn rk_disorder_parameter(state: &RkState, region: &DisorderRegion) -> Result<f64> {
    if state.num_sites() <= RK_ENUMERATION_CAP {
        return rk_disorder_enumerate(state, region);
    }
    if state.graph.dimension() == 1 {
        return rk_disorder_transfer(state, region);
    }
    Err(Error::CapExceeded { what: "enumerated spins", needed: state.num_sites(), cap: RK_ENUMERATION_CAP })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DisorderPoint {
    pub radius: f64,
    pub boundary_bonds: usize,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DisorderRow {
    pub radius: f64,
    pub boundary_bonds: usize,
    pub value: f64,
    /// `None` outside the bound's validity window.
    pub bound: Option<f64>,
    pub violated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DisorderReport {
    pub rows: Vec<DisorderRow>,
    /// Fit of `ln⟨D_R⟩` against the boundary-bond count.
    pub perimeter_fit: Option<LinearFit>,
    /// Smallest radius beyond which the fitted perimeter law exceeds the
    /// volume-law bound, taking `2d(2R)^{d−1}` boundary bonds at radius `R`.
    pub crossover_radius: Option<f64>,
    pub violation: bool,
}

/// Tabulates measured disorder parameters against the volume-law bound.
pub fn disorder_bound_compare(points: &[DisorderPoint], p: &BoundParams, t: f64, d: usize) -> DisorderReport {
    let rows: Vec<DisorderRow> = points
        .iter()
        .map(|pt| {
            let bound = volume_bound(p, pt.radius, t, d).ok();
            let violated = bound.is_some_and(|b| pt.value > b * (1.0 + 1e-12));
            DisorderRow { radius: pt.radius, boundary_bonds: pt.boundary_bonds, value: pt.value, bound, violated }
        })
        .collect();
    let positive: Vec<&DisorderPoint> = points.iter().filter(|pt| pt.value > 0.0).collect();
    let xs: Vec<f64> = positive.iter().map(|pt| pt.boundary_bonds as f64).collect();
    let ys: Vec<f64> = positive.iter().map(|pt| pt.value.ln()).collect();
    let perimeter_fit = linear_fit(&xs, &ys).ok();
    let crossover_radius = perimeter_fit.and_then(|fit| {
        let vt = p.v_vol() * t;
        let surface = |r: f64| 2.0 * d as f64 * (2.0 * r).powi(d as i32 - 1);
        (1..=200_000)
            .map(|k| vt + k as f64 * 0.005)
            .find(|&r| match volume_bound(p, r, t, d) {
                Ok(b) => fit.predict(surface(r)) > b.ln(),
                Err(_) => false,
            })
    });
    let violation = rows.iter().any(|r| r.violated) || crossover_radius.is_some();
    DisorderReport { rows, perimeter_fit, crossover_radius, violation }
}
