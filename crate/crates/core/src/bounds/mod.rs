//! Evaluable versions of the nested-commutator and Lieb-Robinson bounds.
//!
//! Every evaluator refuses to run outside the hypothesis under which its
//! formula is a bound and returns [`Error::Validity`] instead.

mod dominance;
mod identities;

use serde::{Deserialize, Serialize};

use crate::causal::{enumerate_irreducible_paths, DEFAULT_PATH_CAP};
use crate::error::{Error, Result};
use crate::lattice::FactorGraph;
use crate::linalg::real_symmetric_exp;
use crate::operators::HamiltonianSpec;
use crate::scalar::Real;

pub use dominance::{
    combinatorial_constants, combinatorial_regions, evaluate_dominance, random_instance, DominanceInstance,
    DominanceModel, DominanceRow,
};
pub use identities::{binomial, gauss_legendre, hockey_stick_holds, simplex_volume_quadrature};

/// Largest vertex count accepted by [`matrix_exp_bound`].
pub const MATRIX_EXP_MAX_VERTICES: usize = 4096;

/// How unset constants are filled in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantsMode {
    /// Constants are used exactly as configured.
    #[default]
    Desk,
    /// `c_LR = 1/K` and `v_LR = 2Kh′/μ`.
    PaperFormula,
}

/// Constants shared by the bound evaluators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundParams {
    /// Largest term norm.
    pub h: f64,
    /// Degree constant of the factor graph.
    pub delta: usize,
    pub mu: f64,
    pub v_lr: f64,
    pub c_lr: f64,
    pub kappa: f64,
    pub h_prime: f64,
    /// Reproducing constant `K`.
    pub k_rep: f64,
    /// Power-law exponent; `d + 1` when unset.
    pub alpha: Option<f64>,
    /// Box margin.
    pub chi: f64,
    pub c_box: f64,
    pub c_d: f64,
    pub c_d_prime: f64,
    /// Exponent prefactor of the volume-law bound.
    pub gamma_vol: f64,
    /// Velocity of the volume-law bound; `v_lr` when unset.
    pub v_vol: Option<f64>,
    pub dimension: usize,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            h: 1.0,
            delta: 2,
            mu: 1.0,
            v_lr: 1.0,
            c_lr: 1.0,
            kappa: 2.0,
            h_prime: 1.0,
            k_rep: 1.0,
            alpha: None,
            chi: 10.0,
            c_box: 1.0,
            c_d: 1.0,
            c_d_prime: 1.0,
            gamma_vol: 1.0,
            v_vol: None,
            dimension: 1,
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("h", self.h),
            ("mu", self.mu),
            ("v_lr", self.v_lr),
            ("c_lr", self.c_lr),
            ("kappa", self.kappa),
            ("h_prime", self.h_prime),
            ("k_rep", self.k_rep),
            ("chi", self.chi),
            ("c_d", self.c_d),
            ("c_d_prime", self.c_d_prime),
            ("gamma_vol", self.gamma_vol),
            ("alpha", self.alpha()),
            ("v_vol", self.v_vol()),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.c_box.is_finite() && self.c_box >= 0.0) {
            return Err(Error::InvalidArgument("c_box must be non-negative".into()));
        }
        if self.delta == 0 || self.dimension == 0 {
            return Err(Error::InvalidArgument("delta and dimension must be at least 1".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(self.dimension as f64 + 1.0)
    }

    pub fn v_vol(&self) -> f64 {
        self.v_vol.unwrap_or(self.v_lr)
    }

    /// `γ = μχ − ln(2e·3^d)`.
    pub fn gamma(&self) -> f64 {
        self.mu * self.chi - (2.0 * std::f64::consts::E * 3f64.powi(self.dimension as i32)).ln()
    }

    /// `b = h′/h`.
    pub fn b(&self) -> f64 {
        self.h_prime / self.h
    }

    /// `v = 4e·3^d·v_LR`.
    pub fn v_nested(&self) -> f64 {
        4.0 * std::f64::consts::E * 3f64.powi(self.dimension as i32) * self.v_lr
    }

    pub fn with_mode(mut self, mode: ConstantsMode) -> Self {
        if mode == ConstantsMode::PaperFormula {
            self.c_lr = 1.0 / self.k_rep;
            self.v_lr = 2.0 * self.k_rep * self.h_prime / self.mu;
        }
        self
    }
}

/// `(μ′, C)` with `Σ_{X∋u,v}‖H_X‖ ≤ C e^{−μ′ d(u,v)}` for an envelope
/// `(h, κ)` on a graph of degree `Δ`; needs `Δ e^{1−κ} < 1`.
pub fn tail_decay_constants(h: f64, kappa: f64, delta: usize) -> Result<(f64, f64)> {
    let ratio = delta as f64 * (1.0 - kappa).exp();
    if ratio >= 1.0 {
        return Err(Error::Validity(format!(
            "geometric tail diverges: Δ e^(1-κ) = {ratio:.4} >= 1"
        )));
    }
    Ok((kappa - 1.0 - (delta as f64).ln(), h / (1.0 - ratio)))
}

/// Smallest `h′` with `C e^{−μ′ l} ≤ h′ e^{−μ l} l^{−α}` for all `l ≥ 1`.
pub fn h_prime_from_tail(c: f64, mu_prime: f64, mu: f64, alpha: f64) -> Result<f64> {
    let gap = mu_prime - mu;
    if gap <= 0.0 {
        return Err(Error::Validity(format!("need μ < μ′ (μ = {mu}, μ′ = {mu_prime})")));
    }
    // max over l ≥ 1 of l^α e^{−gap·l}, attained at l = α/gap or at l = 1.
    let peak = (alpha / gap).max(1.0);
    Ok(c * (alpha * peak.ln() - gap * peak).exp())
}

fn disjoint(a: &[usize], b: &[usize]) -> bool {
    !a.iter().any(|x| b.contains(x))
}

/// Product over regions of `Σ_Γ (2t)^{|Γ|}/|Γ|! · w(Γ)` where `Γ` ranges over
/// irreducible paths from `r` to `S_i` inside `B_i`, and `weights[X] = ‖H_X‖`
/// for every factor of `g`.
///
/// Paths are enumerated up to `|B_i| + 1` factors, which exceeds the length
/// of any non-self-crossing path that stays in `B_i` after its first step.
pub fn path_sum_bound<R: Real>(
    g: &FactorGraph,
    weights: &[R],
    r: &[usize],
    s_list: &[Vec<usize>],
    b_list: &[Vec<usize>],
    t: R,
) -> Result<R> {
    if weights.len() != g.factors().len() {
        return Err(Error::Shape("need one weight per factor".into()));
    }
    if s_list.len() != b_list.len() {
        return Err(Error::InvalidArgument("need one B_i per S_i".into()));
    }
    for (i, (s, b)) in s_list.iter().zip(b_list).enumerate() {
        if !s.iter().all(|v| b.contains(v)) {
            return Err(Error::Validity(format!("S_{i} is not contained in B_{i}")));
        }
        if !disjoint(b, r) {
            return Err(Error::Validity(format!("B_{i} overlaps R")));
        }
        for (j, other) in b_list[..i].iter().enumerate() {
            let touching = g
                .factors()
                .iter()
                .any(|f| !disjoint(f, b) && !disjoint(f, other));
            if touching {
                return Err(Error::Validity(format!("B_{j} and B_{i} are not separated by a factor")));
            }
        }
    }
    let two_t = R::lit(2.0) * t.abs();
    let mut product = R::one();
    for (s, b) in s_list.iter().zip(b_list) {
        let paths = enumerate_irreducible_paths(g, r, s, b, b.len() + 1, DEFAULT_PATH_CAP)?;
        let sum = R::sum_of(paths.iter().map(|p| {
            let mut term = p.weight(weights);
            for k in 1..=p.len() {
                term = term * two_t / R::count(k);
            }
            term
        }));
        product = product * sum;
    }
    Ok(product)
}

/// [`path_sum_bound`] on the factor graph of `h`.
pub fn path_sum_bound_for<R: Real>(
    h: &HamiltonianSpec<R>,
    r: &[usize],
    s_list: &[Vec<usize>],
    b_list: &[Vec<usize>],
    t: R,
) -> Result<R> {
    let g = h.interaction_graph(None)?;
    let weights: Vec<R> = h.terms().iter().map(|x| x.norm).collect();
    path_sum_bound(&g, &weights, r, s_list, b_list, t)
}

/// `∏ |∂B_i||∂S_i| (2e h |t| Δ / r_i)^{r_i}` for regions `(|∂B_i|, |∂S_i|, r_i)`,
/// valid for `|t| < min r_i / (2hΔ)`.
pub fn combinatorial_bound(p: &BoundParams, regions: &[(usize, usize, usize)], t: f64) -> Result<f64> {
    p.validate()?;
    let r_min = regions
        .iter()
        .map(|&(_, _, r)| r)
        .min()
        .ok_or_else(|| Error::InvalidArgument("no regions".into()))?;
    if r_min == 0 {
        return Err(Error::Validity("R and S_i must be at distance at least 1".into()));
    }
    let window = r_min as f64 / (2.0 * p.h * p.delta as f64);
    if t.abs() >= window {
        return Err(Error::Validity(format!(
            "outside validity window |t| < {window:.6} (t = {t})"
        )));
    }
    let e = std::f64::consts::E;
    Ok(regions
        .iter()
        .map(|&(db, ds, r)| {
            (db * ds) as f64 * (2.0 * e * p.h * t.abs() * p.delta as f64 / r as f64).powi(r as i32)
        })
        .product())
}

/// `h_ij = Σ_{X∋i,j} ‖H_X‖` for `i ≠ j`, zero diagonal.
pub fn coupling_matrix<R: Real>(h: &HamiltonianSpec<R>) -> Vec<Vec<R>> {
    let n = h.num_sites();
    let mut m = vec![vec![R::zero(); n]; n];
    for t in h.terms() {
        let s = t.support();
        for &i in s {
            for &j in s {
                if i != j {
                    m[i][j] = m[i][j] + t.norm;
                }
            }
        }
    }
    m
}

/// `Σ_{X∋u,v} ‖H_X‖`.
pub fn factor_tail_sum<R: Real>(h: &HamiltonianSpec<R>, u: usize, v: usize) -> R {
    R::sum_of(
        h.terms()
            .iter()
            .filter(|t| t.support().contains(&u) && t.support().contains(&v))
            .map(|t| t.norm),
    )
}

/// `∏_i Σ_{u∈∂B_i, v∈∂S_i} [exp(2|t|·h)]_{uv}` for region pairs `(B_i, S_i)`,
/// with boundaries taken in the interaction graph of `h`.
pub fn matrix_exp_bound<R: Real>(
    h: &HamiltonianSpec<R>,
    region_pairs: &[(Vec<usize>, Vec<usize>)],
    t: R,
) -> Result<R> {
    let n = h.num_sites();
    if n > MATRIX_EXP_MAX_VERTICES {
        return Err(Error::CapExceeded { what: "matrix-exponential vertices", needed: n, cap: MATRIX_EXP_MAX_VERTICES });
    }
    let g = h.interaction_graph(None)?;
    let e = if t == R::zero() {
        (0..n).map(|i| (0..n).map(|j| if i == j { R::one() } else { R::zero() }).collect()).collect()
    } else {
        real_symmetric_exp(&coupling_matrix(h), R::lit(2.0) * t.abs())
    };
    let mut product = R::one();
    for (b, s) in region_pairs {
        let db = g.boundary_of(b)?;
        let ds = g.boundary_of(s)?;
        let e = &e;
        let sum = R::sum_of(db.iter().flat_map(|&u| ds.iter().map(move |&v| e[u][v])));
        product = product * sum;
    }
    Ok(product)
}

/// `c_LR exp(−γ (R − v t)^d / (v t)^{d−1})`, valid for `v t > 1` and `R > v t`.
pub fn volume_bound(p: &BoundParams, radius: f64, t: f64, d: usize) -> Result<f64> {
    p.validate()?;
    let vt = p.v_vol() * t;
    if vt <= 1.0 {
        return Err(Error::Validity(format!("needs v·t > 1 (v·t = {vt})")));
    }
    if radius <= vt {
        return Err(Error::Validity(format!("needs R > v·t (R = {radius}, v·t = {vt})")));
    }
    let exponent = p.gamma_vol * (radius - vt).powi(d as i32) / vt.powi(d as i32 - 1);
    Ok(p.c_lr * (-exponent).exp())
}

/// `C min(|∂R|, |∂S|) e^{μ(v t − d(R,S))}`.
pub fn standard_lr_bound(p: &BoundParams, d_r: usize, d_s: usize, dist: usize, t: f64) -> Result<f64> {
    p.validate()?;
    Ok(p.c_lr * d_r.min(d_s) as f64 * (p.mu * (p.v_lr * t.abs() - dist as f64)).exp())
}

/// `c_LR |∂B||∂S| e^{−μ·dist} (e^{μ v t} − 1)`.
pub fn quasilocal_pair_bound(p: &BoundParams, d_b: usize, d_s: usize, dist: usize, t: f64) -> Result<f64> {
    p.validate()?;
    if dist == 0 {
        return Err(Error::Validity("distance must be at least 1".into()));
    }
    Ok(p.c_lr
        * (d_b * d_s) as f64
        * (-p.mu * dist as f64).exp()
        * (p.mu * p.v_lr * t.abs()).exp_m1())
}

/// `μvt (e^{−γ+κ} + μvt)^{m−1} ∏ |∂B_i||∂S_i| b e^{μ(v_LR t − dist_i)}` with
/// `m = regions.len()`; needs `μχ > max(ln 2 + d ln 3 + 2, κ)` and `γ > 1`.
pub fn quasilocal_nested_bound(p: &BoundParams, regions: &[(usize, usize, usize)], t: f64) -> Result<f64> {
    p.validate()?;
    let m = regions.len();
    if m == 0 {
        return Err(Error::InvalidArgument("no regions".into()));
    }
    let d = p.dimension as f64;
    let margin = std::f64::consts::LN_2 + d * 3f64.ln() + 2.0;
    let mu_chi = p.mu * p.chi;
    if mu_chi <= margin.max(p.kappa) {
        return Err(Error::Validity(format!(
            "needs μχ > max(ln2 + d ln3 + 2, κ) = {:.4} (μχ = {mu_chi})",
            margin.max(p.kappa)
        )));
    }
    let gamma = p.gamma();
    if gamma <= 1.0 {
        return Err(Error::Validity(format!("needs γ > 1 (γ = {gamma})")));
    }
    let mvt = p.mu * p.v_nested() * t.abs();
    let prefactor = mvt * ((p.kappa - gamma).exp() + mvt).powi(m as i32 - 1);
    let product: f64 = regions
        .iter()
        .map(|&(db, ds, dist)| {
            (db * ds) as f64 * p.b() * (p.mu * (p.v_lr * t.abs() - dist as f64)).exp()
        })
        .product();
    Ok(prefactor * product)
}

/// `c_d exp[4μ v t − c′_d μ M / (v t + c_box)^{d−1}]`.
pub fn truncation_error_bound(p: &BoundParams, t: f64, volume: usize, d: usize) -> Result<f64> {
    p.validate()?;
    if volume == 0 {
        return Err(Error::InvalidArgument("cutoff volume must be at least 1".into()));
    }
    let vt = p.v_lr * t.abs();
    let exponent =
        4.0 * p.mu * vt - p.c_d_prime * p.mu * volume as f64 / (vt + p.c_box).powi(d as i32 - 1);
    Ok(p.c_d * exponent.exp())
}

/// `G_α(l) = e^{−μl} l^{−α}`.
pub fn reproducing_profile(mu: f64, alpha: f64, l: usize) -> f64 {
    (-mu * l as f64).exp() / (l as f64).powf(alpha)
}

/// Largest `Σ_{k≠u,v} G(d(u,k)) G(d(k,v)) / G(d(u,v))` over the sampled pairs.
pub fn verify_reproducing(g: &FactorGraph, mu: f64, alpha: f64, pairs: &[(usize, usize)]) -> Result<f64> {
    if alpha <= g.dimension() as f64 {
        return Err(Error::Validity(format!("needs α > d (α = {alpha}, d = {})", g.dimension())));
    }
    let mut worst = 0.0f64;
    for &(u, v) in pairs {
        if u == v {
            return Err(Error::InvalidArgument("pairs must have distinct endpoints".into()));
        }
        let du = g.distances_from(&[u])?;
        let dv = g.distances_from(&[v])?;
        let sum: f64 = g
            .vertices()
            .filter(|&k| k != u && k != v)
            .map(|k| reproducing_profile(mu, alpha, du[k]) * reproducing_profile(mu, alpha, dv[k]))
            .sum();
        worst = worst.max(sum / reproducing_profile(mu, alpha, du[v]));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::chain;
    use crate::operators::{build_named_hamiltonian, LocalOperator, ModelParams, Pauli};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn combinatorial_examples() {
        let p = BoundParams { h: 1.0, delta: 4, ..Default::default() };
        let v = combinatorial_bound(&p, &[(20, 1, 5)], 0.1).unwrap();
        let want = 20.0 * (0.8 * std::f64::consts::E / 5.0).powi(5);
        assert!(close(v, want, 1e-14) && (v - 0.311).abs() < 5e-4);
        assert_eq!(combinatorial_bound(&p, &[(20, 1, 5)], 0.0).unwrap(), 0.0);
        let edge = 5.0 / 8.0;
        assert!(combinatorial_bound(&p, &[(20, 1, 5)], edge).unwrap_err().is_validity());
    }

    #[test]
    fn volume_bound_shapes() {
        let p = BoundParams { c_lr: 2.0, v_lr: 1.0, gamma_vol: 0.7, ..Default::default() };
        let near = volume_bound(&p, 2.0 * (1.0 + 1e-12), 2.0, 2).unwrap();
        assert!(close(near, 2.0, 1e-9));
        let d1 = volume_bound(&p, 5.0, 2.0, 1).unwrap();
        assert!(close(d1, 2.0 * (-0.7 * 3.0f64).exp(), 1e-14));
        let deficit = |x: f64| -(volume_bound(&p, 2.0 + x, 2.0, 2).unwrap() / 2.0).ln();
        assert!(close(deficit(2.0) / deficit(1.0), 4.0, 1e-12));
        assert!(volume_bound(&p, 5.0, 0.5, 1).unwrap_err().is_validity());
        assert!(volume_bound(&p, 1.5, 2.0, 1).unwrap_err().is_validity());
    }

    #[test]
    fn pair_bound_examples() {
        let p = BoundParams { mu: 1.0, v_lr: 1.0, c_lr: 1.0, ..Default::default() };
        assert_eq!(quasilocal_pair_bound(&p, 1, 1, 3, 0.0).unwrap(), 0.0);
        let v = quasilocal_pair_bound(&p, 1, 1, 3, 1.0).unwrap();
        assert!(close(v, (-3f64).exp() * (std::f64::consts::E - 1.0), 1e-14));
        assert!((v - 0.0855).abs() < 1e-4);
        let mut last = f64::INFINITY;
        for dist in 1..30 {
            let x = quasilocal_pair_bound(&p, 1, 1, dist, 1.0).unwrap();
            assert!(x < last);
            last = x;
        }
        assert!(quasilocal_pair_bound(&p, 1, 1, 0, 1.0).is_err());
    }

    #[test]
    fn nested_bound_hypotheses() {
        let p = BoundParams { mu: 1.0, chi: 10.0, kappa: 2.0, ..Default::default() };
        assert!(p.gamma() > 1.0);
        let m1 = quasilocal_nested_bound(&p, &[(2, 1, 4)], 0.3).unwrap();
        let expect = p.mu * p.v_nested() * 0.3 * 2.0 * p.b() * (p.mu * (0.3 - 4.0)).exp();
        assert!(close(m1, expect, 1e-13));
        // Θ(t) at small t.
        let small = |t: f64| quasilocal_nested_bound(&p, &[(1, 1, 3), (1, 1, 3)], t).unwrap();
        assert!(close(small(1e-9) / small(2e-9), 0.5, 1e-4));
        let bad = BoundParams { kappa: 11.0, ..p.clone() };
        assert!(quasilocal_nested_bound(&bad, &[(1, 1, 3)], 0.1).unwrap_err().is_validity());
    }

    #[test]
    fn truncation_examples() {
        let p = BoundParams { mu: 1.0, v_lr: 1.0, c_d: 1.0, c_d_prime: 1.0, c_box: 0.0, ..Default::default() };
        let v = truncation_error_bound(&p, 1.0, 8, 2).unwrap();
        assert!(close(v, (-4f64).exp(), 1e-14));
        let a = truncation_error_bound(&p, 3.0, 10, 1).unwrap();
        let b = truncation_error_bound(&p, 3.0, 11, 1).unwrap();
        assert!(b < a);
        assert!(close(a / b, 1f64.exp(), 1e-12), "d = 1 exponent ignores the denominator");
    }

    #[test]
    fn paper_formula_mode() {
        let p = BoundParams { k_rep: 2.0, h_prime: 3.0, mu: 0.5, ..Default::default() }
            .with_mode(ConstantsMode::PaperFormula);
        assert!(close(p.c_lr, 0.5, 1e-15));
        assert!(close(p.v_lr, 24.0, 1e-15));
        assert!(close(p.alpha(), 2.0, 0.0));
    }

    #[test]
    fn tail_constants() {
        let (mu_p, c) = tail_decay_constants(1.0, 3.0, 2).unwrap();
        assert!(close(mu_p, 2.0 - 2f64.ln(), 1e-14));
        assert!(c > 1.0);
        assert!(tail_decay_constants(1.0, 1.5, 2).unwrap_err().is_validity());
        let hp = h_prime_from_tail(c, mu_p, mu_p / 2.0, 2.0).unwrap();
        for l in 1..60 {
            let lhs = c * (-mu_p * l as f64).exp();
            let rhs = hp * (-mu_p / 2.0 * l as f64).exp() / (l as f64).powi(2);
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    fn tfim(l: usize, g: f64) -> HamiltonianSpec<f64> {
        let p: ModelParams = [("J".to_string(), 1.0), ("g".to_string(), g)].into();
        build_named_hamiltonian("tfim", &chain(l).unwrap(), &p).unwrap()
    }

    #[test]
    fn path_sum_examples() {
        // Four-site chain with a weak middle bond.
        let eps = 0.01;
        let ops = vec![
            LocalOperator::<f64>::pauli_string(&[(0, Pauli::Z), (1, Pauli::Z)]).unwrap(),
            LocalOperator::pauli_string(&[(1, Pauli::Z), (2, Pauli::Z)]).unwrap().scale_real(eps),
            LocalOperator::pauli_string(&[(2, Pauli::Z), (3, Pauli::Z)]).unwrap(),
        ];
        let h = HamiltonianSpec::new(4, ops).unwrap();
        let v = path_sum_bound_for(&h, &[0], &[vec![3]], &[vec![1, 2, 3]], 1.0).unwrap();
        assert!(close(v, eps * 8.0 / 6.0, 1e-14));
        assert!(close(2.0 * v, 0.02667, 2e-4));

        let h2 = tfim(2, 0.0);
        let v = path_sum_bound_for(&h2, &[0], &[vec![1]], &[vec![1]], 0.4).unwrap();
        assert!(close(v, 2.0 * 0.4 * 1.0, 1e-14));

        let h5 = tfim(5, 0.5);
        let none = path_sum_bound_for(&h5, &[0, 1], &[vec![4]], &[vec![4]], 0.4).unwrap();
        assert_eq!(none, 0.0);
    }

    #[test]
    fn matrix_exp_examples() {
        let h = tfim(6, 0.0);
        let pairs = vec![(vec![3, 4, 5], vec![5])];
        assert_eq!(matrix_exp_bound(&h, &pairs, 0.0).unwrap(), 0.0);
        let v = matrix_exp_bound(&h, &pairs, 0.3).unwrap();
        // Taylor oracle for exp(0.6 h) entry (3, 5).
        let m = coupling_matrix(&h);
        let n = 6;
        let mut term = vec![vec![0.0; n]; n];
        let mut sum = vec![vec![0.0; n]; n];
        for i in 0..n {
            term[i][i] = 1.0;
            sum[i][i] = 1.0;
        }
        for k in 1..60 {
            let mut next = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = (0..n).map(|l| term[i][l] * m[l][j]).sum::<f64>() * 0.6 / k as f64;
                }
            }
            term = next;
            for i in 0..n {
                for j in 0..n {
                    sum[i][j] += term[i][j];
                }
            }
        }
        assert!((v - sum[3][5]).abs() < 1e-10);
    }

    #[test]
    fn factor_tails() {
        let h = tfim(5, 0.5);
        assert!(close(factor_tail_sum(&h, 1, 2), 1.0, 1e-14));
        assert_eq!(factor_tail_sum(&h, 1, 3), 0.0);
    }

    #[test]
    fn reproducing_constant() {
        let g = chain(3).unwrap();
        // No vertex strictly between 0 and 1 except 2, which is off the segment.
        let k = verify_reproducing(&g, 1.0, 2.0, &[(0, 1)]).unwrap();
        assert!(k > 0.0);
        let g2 = chain(2).unwrap();
        assert_eq!(verify_reproducing(&g2, 1.0, 2.0, &[(0, 1)]).unwrap(), 0.0);
        assert!(verify_reproducing(&g2, 1.0, 1.0, &[(0, 1)]).unwrap_err().is_validity());
    }
}
