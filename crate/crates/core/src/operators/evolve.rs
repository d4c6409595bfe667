use super::{HamiltonianSpec, LocalOperator, MarginalProvider, SiteLayout, State};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{Real, C};

/// Largest region (in qubits) evolved densely by default.
pub const DEFAULT_EVOLVE_CAP: usize = 14;

/// Largest register for state-vector propagation.
const STATE_CAP: usize = 22;

/// Sparse action of a Hamiltonian restricted to a region on state vectors.
#[derive(Clone, Debug)]
pub struct Propagator<R: Real> {
    region: Vec<usize>,
    terms: Vec<(SiteLayout, CMatrix<R>)>,
    norm_bound: R,
}

impl<R: Real> Propagator<R> {
    /// Uses every term of `h` supported inside `region` (ascending).
    pub fn new(h: &HamiltonianSpec<R>, region: &[usize]) -> Result<Self> {
        let region = normalize_region(region)?;
        if region.len() > STATE_CAP {
            return Err(Error::CapExceeded { what: "register qubits", needed: region.len(), cap: STATE_CAP });
        }
        let mut terms = Vec::new();
        let mut norm_bound = R::zero();
        for t in h.restricted_to(&region) {
            terms.push((SiteLayout::new(&region, t.support())?, t.op.matrix().clone()));
            norm_bound = norm_bound + t.norm;
        }
        Ok(Propagator { region, terms, norm_bound })
    }

    pub fn region(&self) -> &[usize] {
        &self.region
    }

    pub fn dim(&self) -> usize {
        1 << self.region.len()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// `H ψ`.
    pub fn apply_h(&self, psi: &[C<R>]) -> Vec<C<R>> {
        let mut out = vec![C::new(R::zero(), R::zero()); psi.len()];
        for (layout, m) in &self.terms {
            apply_local(layout, m, psi, &mut out);
        }
        out
    }

    /// `e^{−iHt} ψ` by a step-split Taylor series.
    pub fn evolve_state(&self, psi: &[C<R>], t: R) -> Vec<C<R>> {
        let mut state = psi.to_vec();
        if t == R::zero() || self.terms.is_empty() {
            return state;
        }
        let half = R::lit(0.5);
        let steps = ((t.abs() * self.norm_bound) / half).ceil().max(R::one());
        let n_steps = steps.to_usize().unwrap_or(1).max(1);
        let tau = t / R::count(n_steps);
        let eps = R::precision() * R::lit(0.1);
        for _ in 0..n_steps {
            let mut term = state.clone();
            let mut acc = state;
            for k in 1..=64usize {
                let hv = self.apply_h(&term);
                let coeff = C::new(R::zero(), -tau / R::count(k));
                term = hv.into_iter().map(|z| z * coeff).collect();
                let mut tn = R::zero();
                for (a, b) in acc.iter_mut().zip(&term) {
                    *a = *a + *b;
                    tn = tn + b.norm_sqr();
                }
                if tn.sqrt() <= eps {
                    break;
                }
            }
            state = acc;
        }
        state
    }

    /// Dense matrix of the restricted Hamiltonian.
    pub fn dense(&self) -> CMatrix<R> {
        let dim = self.dim();
        let mut h = CMatrix::zeros(dim, dim);
        for (layout, m) in &self.terms {
            let k = m.rows();
            for r in 0..dim {
                let (rs, rest) = layout.split(r);
                for cs in 0..k {
                    h[(r, rest | layout.spread[cs])] = h[(r, rest | layout.spread[cs])] + m[(rs, cs)];
                }
            }
        }
        h
    }
}

fn apply_local<R: Real>(layout: &SiteLayout, m: &CMatrix<R>, psi: &[C<R>], out: &mut [C<R>]) {
    let k = m.rows();
    let mut local = vec![C::new(R::zero(), R::zero()); k];
    for base in (0..psi.len()).filter(|&i| i & layout.mask() == 0) {
        let mut any = false;
        for (j, slot) in local.iter_mut().enumerate() {
            *slot = psi[base | layout.spread[j]];
            any |= slot.re != R::zero() || slot.im != R::zero();
        }
        if !any {
            continue;
        }
        for a in 0..k {
            let row = m.row(a);
            let mut s = C::new(R::zero(), R::zero());
            for (x, y) in row.iter().zip(&local) {
                s = s + *x * *y;
            }
            let idx = base | layout.spread[a];
            out[idx] = out[idx] + s;
        }
    }
}

/// `O·M` for `O` acting on the `layout` sites of the register of `M`.
fn left_mul_local<R: Real>(layout: &SiteLayout, o: &CMatrix<R>, m: &CMatrix<R>) -> CMatrix<R> {
    let (dim, k) = (m.rows(), o.rows());
    let mut out = vec![C::new(R::zero(), R::zero()); dim * dim];
    for base in (0..dim).filter(|&i| i & layout.mask() == 0) {
        for a in 0..k {
            let dst = (base | layout.spread[a]) * dim;
            for (b, &c) in o.row(a).iter().enumerate() {
                if c.re == R::zero() && c.im == R::zero() {
                    continue;
                }
                let src = m.row(base | layout.spread[b]);
                for (x, y) in out[dst..dst + dim].iter_mut().zip(src) {
                    *x = *x + c * *y;
                }
            }
        }
    }
    CMatrix::from_row_major(dim, dim, out).expect("square")
}

/// `M·O` for `O` acting on the `layout` sites of the register of `M`.
fn right_mul_local<R: Real>(layout: &SiteLayout, m: &CMatrix<R>, o: &CMatrix<R>) -> CMatrix<R> {
    let dim = m.rows();
    let ot = CMatrix::from_fn(o.cols(), o.rows(), |i, j| o[(j, i)]);
    let mut out = vec![C::new(R::zero(), R::zero()); dim * dim];
    for r in 0..dim {
        apply_local(layout, &ot, m.row(r), &mut out[r * dim..(r + 1) * dim]);
    }
    CMatrix::from_row_major(dim, dim, out).expect("square")
}

fn normalize_region(region: &[usize]) -> Result<Vec<usize>> {
    let mut r = region.to_vec();
    r.sort_unstable();
    r.dedup();
    if r.len() != region.len() {
        return Err(Error::InvalidArgument("region has repeated sites".into()));
    }
    Ok(r)
}

fn check_inside(support: &[usize], region: &[usize]) -> Result<()> {
    match support.iter().find(|v| region.binary_search(v).is_err()) {
        Some(&v) => Err(Error::InvalidArgument(format!("site {v} lies outside the evolution region"))),
        None => Ok(()),
    }
}

/// `e^{iH_R t} A e^{−iH_R t}` on `region`, where `H_R` keeps the terms
/// contained in `region`.
pub fn heisenberg_evolve<R: Real>(
    h: &HamiltonianSpec<R>,
    a: &LocalOperator<R>,
    t: R,
    region: &[usize],
) -> Result<LocalOperator<R>> {
    heisenberg_evolve_with_cap(h, a, t, region, DEFAULT_EVOLVE_CAP)
}

pub fn heisenberg_evolve_with_cap<R: Real>(
    h: &HamiltonianSpec<R>,
    a: &LocalOperator<R>,
    t: R,
    region: &[usize],
    cap: usize,
) -> Result<LocalOperator<R>> {
    let region = normalize_region(region)?;
    check_inside(a.support(), &region)?;
    if region.len() > cap {
        return Err(Error::CapExceeded { what: "evolution region qubits", needed: region.len(), cap });
    }
    let a_full = a.embed(&region)?;
    if t == R::zero() {
        return LocalOperator::new(region, a_full);
    }
    let hm = h.dense_on(&region);
    let (vals, vecs) = hm.eigh();
    let vd = vecs.adjoint();
    let layout = SiteLayout::new(&region, a.support())?;
    let mut tilde = vd.matmul(&left_mul_local(&layout, a.matrix(), &vecs));
    let n = vals.len();
    let phase: Vec<C<R>> = vals.iter().map(|&l| C::new((l * t).cos(), (l * t).sin())).collect();
    for j in 0..n {
        for k in 0..n {
            tilde[(j, k)] = tilde[(j, k)] * phase[j] * phase[k].conj();
        }
    }
    LocalOperator::new(region, vecs.matmul(&tilde).matmul(&vd))
}

/// `2^{−m}‖[O_m, […, [O_1, A(t)]…]]‖` with `A(t)` evolved densely in `region`.
pub fn nested_commutator_norm<R: Real>(
    h: &HamiltonianSpec<R>,
    a: &LocalOperator<R>,
    o_list: &[LocalOperator<R>],
    t: R,
    region: &[usize],
) -> Result<R> {
    let region = normalize_region(region)?;
    let mut seen: Vec<usize> = a.support().to_vec();
    for o in o_list {
        if o.support().iter().any(|v| seen.contains(v)) {
            return Err(Error::InvalidArgument("operator supports must be pairwise disjoint".into()));
        }
        seen.extend_from_slice(o.support());
        let norm = o.norm();
        if (norm - R::one()).abs() > R::lit(1e-9) {
            return Err(Error::InvalidArgument(format!("probe operator has norm {norm}, expected 1")));
        }
        check_inside(o.support(), &region)?;
    }
    let evolved = heisenberg_evolve(h, a, t, &region)?;
    let mut acc = evolved.into_matrix();
    for o in o_list {
        let layout = SiteLayout::new(&region, o.support())?;
        acc = left_mul_local(&layout, o.matrix(), &acc).sub(&right_mul_local(&layout, &acc, o.matrix()));
    }
    Ok(acc.spectral_norm() / R::lit(2.0).powi(o_list.len() as i32))
}

/// `⟨φ|A|φ⟩` for a state vector on `register`.
pub(crate) fn expectation_on<R: Real>(a: &LocalOperator<R>, phi: &[C<R>], register: &[usize]) -> Result<C<R>> {
    let layout = SiteLayout::new(register, a.support())?;
    let mut aphi = vec![C::new(R::zero(), R::zero()); phi.len()];
    apply_local(&layout, a.matrix(), phi, &mut aphi);
    Ok(phi.iter().zip(&aphi).fold(C::new(R::zero(), R::zero()), |s, (x, y)| s + x.conj() * *y))
}

/// `Tr[ρ A(t)]` on the full system by state propagation.
pub fn exact_expectation<R: Real>(
    h: &HamiltonianSpec<R>,
    a: &LocalOperator<R>,
    rho: &State<R>,
    t: R,
) -> Result<R> {
    let n = h.num_sites();
    if rho.num_sites() != n {
        return Err(Error::Shape(format!(
            "state has {} sites, Hamiltonian has {n}",
            rho.num_sites()
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    check_inside(a.support(), &all)?;
    let prop = Propagator::new(h, &all)?;
    let ensemble = match rho {
        State::Pure(psi) => vec![(R::one(), psi.clone())],
        _ => rho.ensemble(&all)?,
    };
    let mut total = R::zero();
    for (p, psi) in ensemble {
        let phi = prop.evolve_state(&psi, t);
        total = total + p * expectation_on(a, &phi, &all)?.re;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::{build_named_hamiltonian, ModelParams, Pauli};
    use super::*;
    use crate::lattice::chain;

    type Op = LocalOperator<f64>;

    fn single(p: Pauli, coeff: f64) -> HamiltonianSpec<f64> {
        HamiltonianSpec::new(1, vec![Op::pauli(p, 0).scale_real(coeff)]).unwrap()
    }

    fn tfim(l: usize, g: f64) -> HamiltonianSpec<f64> {
        let p: ModelParams = [("J".to_string(), 1.0), ("g".to_string(), g)].into();
        build_named_hamiltonian("tfim", &chain(l).unwrap(), &p).unwrap()
    }

    #[test]
    fn bloch_precession() {
        let h = single(Pauli::Z, 1.0);
        let x = Op::pauli(Pauli::X, 0);
        for &t in &[0.0, 0.3, 1.1, 2.5] {
            let got = heisenberg_evolve(&h, &x, t, &[0]).unwrap();
            let want = x.scale_real((2.0 * t).cos()).sub(&Op::pauli(Pauli::Y, 0).scale_real((2.0 * t).sin()));
            assert!(got.max_abs_diff(&want) < 1e-12, "t={t}");
        }
    }

    #[test]
    fn commuting_observable_is_static() {
        let h = tfim(4, 0.0);
        let z = Op::pauli(Pauli::Z, 1);
        let got = heisenberg_evolve(&h, &z, 0.9, &[0, 1, 2, 3]).unwrap();
        assert!(got.max_abs_diff(&z) < 1e-12);
    }

    #[test]
    fn rabi_oscillation() {
        let h = single(Pauli::X, 1.0);
        let z = Op::pauli(Pauli::Z, 0);
        let rho = State::all_zero(1);
        for &t in &[0.0, 0.4, 1.7] {
            let v = exact_expectation(&h, &z, &rho, t).unwrap();
            assert!((v - (2.0 * t).cos()).abs() < 1e-12);
        }
        let mixed = State::maximally_mixed(1);
        assert!(exact_expectation(&h, &z, &mixed, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn propagation_matches_dense_evolution() {
        let h = tfim(5, 0.7);
        let z0 = Op::pauli(Pauli::Z, 0);
        let rho = State::all_zero(5);
        let all: Vec<usize> = (0..5).collect();
        for &t in &[0.25, 1.0, 2.0] {
            let dense = heisenberg_evolve(&h, &z0, t, &all).unwrap();
            let psi = match &rho {
                State::Product(_) => {
                    let mut v = vec![C::new(0.0, 0.0); 32];
                    v[0] = C::new(1.0, 0.0);
                    v
                }
                _ => unreachable!(),
            };
            let via_dense = expectation_on(&dense, &psi, &all).unwrap().re;
            let via_state = exact_expectation(&h, &z0, &rho, t).unwrap();
            assert!((via_dense - via_state).abs() < 1e-12, "t={t}: {via_dense} vs {via_state}");
        }
    }

    #[test]
    fn dense_propagator_matrix_matches_spec() {
        let h = tfim(3, 0.4);
        let p = Propagator::new(&h, &[0, 1, 2]).unwrap();
        assert!(p.dense().sub(&h.dense()).max_abs() < 1e-15);
    }

    #[test]
    fn nested_commutator_basics() {
        let h = tfim(5, 0.5);
        let all: Vec<usize> = (0..5).collect();
        let z0 = Op::pauli(Pauli::Z, 0);
        let x2 = Op::pauli(Pauli::X, 2);
        let x4 = Op::pauli(Pauli::X, 4);
        assert!(nested_commutator_norm(&h, &z0, &[x2.clone()], 0.0, &all).unwrap() < 1e-14);
        let m0 = nested_commutator_norm(&h, &z0, &[], 0.7, &all).unwrap();
        assert!((m0 - 1.0).abs() < 1e-10);
        let v = nested_commutator_norm(&h, &z0, &[x2.clone(), x4], 0.5, &all).unwrap();
        assert!(v > 0.0 && v <= 1.0 + 1e-12);
        assert!(nested_commutator_norm(&h, &z0, &[Op::pauli(Pauli::X, 0)], 0.5, &all).is_err());
        assert!(nested_commutator_norm(&h, &z0, &[x2.scale_real(2.0)], 0.5, &all).is_err());
    }

    #[test]
    fn cap_enforced() {
        let h = tfim(4, 0.5);
        let z = Op::pauli(Pauli::Z, 0);
        assert!(matches!(
            heisenberg_evolve_with_cap(&h, &z, 0.1, &[0, 1, 2, 3], 3),
            Err(Error::CapExceeded { .. })
        ));
        assert!(heisenberg_evolve(&h, &z, 0.1, &[1, 2]).is_err());
    }
}
