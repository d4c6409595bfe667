//! Dense qubit operators, Hamiltonians and exact time evolution.
//!
//! Basis convention: for an operator on support `[s_0 < s_1 < …]`, site
//! `s_0` is the most significant bit of the matrix index, so the matrix of
//! `X_{s_0} Z_{s_1}` is `X ⊗ Z`.

mod evolve;
mod hamiltonian;
mod state;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{c_real, Real, C};

pub use evolve::{
    exact_expectation, heisenberg_evolve, heisenberg_evolve_with_cap, nested_commutator_norm,
    Propagator, DEFAULT_EVOLVE_CAP,
};
pub use hamiltonian::{
    build_named_hamiltonian, check_quasilocal, Envelope, HamiltonianSpec, ModelParams,
    QuasilocalReport, Term,
};
pub use state::{partial_trace_pure, MarginalProvider, State};
pub(crate) use evolve::expectation_on;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix<R: Real>(self) -> CMatrix<R> {
        let (o, z) = (R::one(), R::zero());
        let c = |re: R, im: R| C::new(re, im);
        let data = match self {
            Pauli::I => [c(o, z), c(z, z), c(z, z), c(o, z)],
            Pauli::X => [c(z, z), c(o, z), c(o, z), c(z, z)],
            Pauli::Y => [c(z, z), c(z, -o), c(z, o), c(z, z)],
            Pauli::Z => [c(o, z), c(z, z), c(z, z), c(-o, z)],
        };
        CMatrix::from_row_major(2, 2, data.to_vec()).expect("2x2")
    }
}

/// An operator acting on the sites `support` (ascending) and as the
/// identity elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator<R: Real> {
    support: Vec<usize>,
    matrix: CMatrix<R>,
}

impl<R: Real> LocalOperator<R> {
    pub fn new(support: Vec<usize>, matrix: CMatrix<R>) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "support {support:?} must be strictly increasing"
            )));
        }
        let dim = 1usize
            .checked_shl(support.len() as u32)
            .ok_or_else(|| Error::Shape("support too large".into()))?;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Shape(format!(
                "{} sites need a {dim}x{dim} matrix, got {}x{}",
                support.len(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(LocalOperator { support, matrix })
    }

    /// `c·I` with empty support.
    pub fn scalar(c: C<R>) -> Self {
        LocalOperator { support: Vec::new(), matrix: CMatrix::diagonal(&[c]) }
    }

    pub fn identity() -> Self {
        Self::scalar(C::new(R::one(), R::zero()))
    }

    pub fn pauli(p: Pauli, site: usize) -> Self {
        LocalOperator { support: vec![site], matrix: p.matrix() }
    }

    /// Tensor product of single-site Paulis; sites must be distinct.
    pub fn pauli_string(factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut sorted = factors.to_vec();
        sorted.sort_by_key(|&(s, _)| s);
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("repeated site in Pauli string".into()));
        }
        let mut m = CMatrix::identity(1);
        for &(_, p) in &sorted {
            m = m.kron(&p.matrix());
        }
        LocalOperator::new(sorted.into_iter().map(|(s, _)| s).collect(), m)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<R> {
        self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.support.len()
    }

    pub fn norm(&self) -> R {
        self.matrix.spectral_norm()
    }

    pub fn hermiticity_defect(&self) -> R {
        self.matrix.hermiticity_defect()
    }

    pub fn adjoint(&self) -> Self {
        LocalOperator { support: self.support.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, s: C<R>) -> Self {
        LocalOperator { support: self.support.clone(), matrix: self.matrix.scale(s) }
    }

    pub fn scale_real(&self, s: R) -> Self {
        self.scale(c_real(s))
    }

    /// Matrix of this operator on the larger ordered support `target`.
    pub fn embed(&self, target: &[usize]) -> Result<CMatrix<R>> {
        let layout = SiteLayout::new(target, &self.support)?;
        let dim = 1usize << target.len();
        let k = 1usize << self.support.len();
        let mut out = CMatrix::zeros(dim, dim);
        for r in 0..dim {
            let (rsub, rest) = layout.split(r);
            for csub in 0..k {
                let v = self.matrix[(rsub, csub)];
                if v.re != R::zero() || v.im != R::zero() {
                    out[(r, rest | layout.spread[csub])] = v;
                }
            }
        }
        Ok(out)
    }

    /// This operator re-expressed on `target ⊇ support`.
    pub fn on_support(&self, target: &[usize]) -> Result<Self> {
        LocalOperator::new(target.to_vec(), self.embed(target)?)
    }

    fn union_support(&self, other: &Self) -> Vec<usize> {
        let mut u: Vec<usize> = self.support.iter().chain(&other.support).copied().collect();
        u.sort_unstable();
        u.dedup();
        u
    }

    pub fn add(&self, other: &Self) -> Self {
        let u = self.union_support(other);
        let a = self.embed(&u).expect("union contains support");
        let b = other.embed(&u).expect("union contains support");
        LocalOperator { support: u, matrix: a.add(&b) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_real(-R::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let u = self.union_support(other);
        let a = self.embed(&u).expect("union contains support");
        let b = other.embed(&u).expect("union contains support");
        LocalOperator { support: u, matrix: a.matmul(&b) }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        let u = self.union_support(other);
        let a = self.embed(&u).expect("union contains support");
        let b = other.embed(&u).expect("union contains support");
        LocalOperator { support: u, matrix: a.commutator(&b) }
    }

    /// Maximum entrywise difference after embedding both on a common support.
    pub fn max_abs_diff(&self, other: &Self) -> R {
        self.sub(other).matrix.max_abs()
    }

    /// Drops sites on which the operator acts as the identity.
    pub fn trimmed(&self, tol: R) -> Self {
        let mut op = self.clone();
        let mut pos = 0;
        while pos < op.support.len() {
            match op.factor_out_identity(pos, tol) {
                Some(reduced) => op = reduced,
                None => pos += 1,
            }
        }
        op
    }

    // If the operator is `I ⊗ M` on the site at `pos`, returns `M`.
    fn factor_out_identity(&self, pos: usize, tol: R) -> Option<Self> {
        let n = self.support.len();
        let shift = n - 1 - pos;
        let half = 1usize << (n - 1);
        let expand = |x: usize| -> usize {
            let high = (x >> shift) << (shift + 1);
            let low = x & ((1 << shift) - 1);
            high | low
        };
        let bit = 1usize << shift;
        let reduced = CMatrix::from_fn(half, half, |i, j| {
            (self.matrix[(expand(i), expand(j))] + self.matrix[(expand(i) | bit, expand(j) | bit)])
                / c_real(R::lit(2.0))
        });
        let mut support = self.support.clone();
        support.remove(pos);
        let candidate = LocalOperator { support, matrix: reduced };
        let back = candidate.embed(&self.support).ok()?;
        (back.sub(&self.matrix).max_abs() <= tol).then_some(candidate)
    }
}

/// Index bookkeeping for a sub-support inside an ordered register.
#[derive(Clone, Debug)]
pub(crate) struct SiteLayout {
    /// `spread[j]`: register bits set by sub-index `j`.
    pub spread: Vec<usize>,
    shifts: Vec<usize>,
    mask: usize,
}

impl SiteLayout {
    pub fn new(register: &[usize], sub: &[usize]) -> Result<Self> {
        let n = register.len();
        let mut shifts = Vec::with_capacity(sub.len());
        for &s in sub {
            let pos = register
                .iter()
                .position(|&r| r == s)
                .ok_or(Error::UnknownVertex(s))?;
            shifts.push(n - 1 - pos);
        }
        let k = sub.len();
        let spread = (0..1usize << k)
            .map(|j| {
                (0..k)
                    .filter(|&b| (j >> (k - 1 - b)) & 1 == 1)
                    .map(|b| 1usize << shifts[b])
                    .fold(0, |acc, x| acc | x)
            })
            .collect();
        let mask = shifts.iter().fold(0, |acc, &s| acc | (1 << s));
        Ok(SiteLayout { spread, shifts, mask })
    }

    /// Splits a register index into (sub-index, remaining bits).
    pub fn split(&self, idx: usize) -> (usize, usize) {
        let sub = self.shifts.iter().fold(0, |acc, &s| (acc << 1) | ((idx >> s) & 1));
        (sub, idx & !self.mask)
    }

    pub fn mask(&self) -> usize {
        self.mask
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorJson {
    support: Vec<usize>,
    /// Row-major `[re, im]` pairs.
    matrix: Vec<[f64; 2]>,
}

impl<R: Real> Serialize for LocalOperator<R> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorJson {
            support: self.support.clone(),
            matrix: self.matrix.as_slice().iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect(),
        }
        .serialize(s)
    }
}

impl<'de, R: Real> Deserialize<'de> for LocalOperator<R> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = OperatorJson::deserialize(d)?;
        let dim = 1usize << j.support.len();
        let data = j.matrix.iter().map(|&[re, im]| C::new(R::lit(re), R::lit(im))).collect();
        let m = CMatrix::from_row_major(dim, dim, data).map_err(serde::de::Error::custom)?;
        LocalOperator::new(j.support, m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Op = LocalOperator<f64>;

    #[test]
    fn norms() {
        assert!((Op::identity().norm() - 1.0).abs() < 1e-12);
        let zz = Op::pauli_string(&[(0, Pauli::Z), (1, Pauli::Z)]).unwrap();
        assert!((zz.norm() - 1.0).abs() < 1e-12);
        let xz = Op::pauli(Pauli::X, 0).add(&Op::pauli(Pauli::Z, 0));
        assert!((xz.norm() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn embedding_order_is_msb_first() {
        let x1 = Op::pauli(Pauli::X, 1);
        let m = x1.embed(&[0, 1]).unwrap();
        let expect = Pauli::I.matrix::<f64>().kron(&Pauli::X.matrix());
        assert_eq!(m, expect);
        let m = x1.embed(&[1, 4]).unwrap();
        assert_eq!(m, Pauli::X.matrix::<f64>().kron(&Pauli::I.matrix()));
        assert!(x1.embed(&[0, 2]).is_err());
    }

    #[test]
    fn pauli_algebra() {
        let x = Op::pauli(Pauli::X, 3);
        let y = Op::pauli(Pauli::Y, 3);
        let z = Op::pauli(Pauli::Z, 3);
        // [X, Y] = 2iZ
        let c = x.commutator(&y);
        assert!(c.max_abs_diff(&z.scale(C::new(0.0, 2.0))) < 1e-14);
        let disjoint = x.commutator(&Op::pauli(Pauli::Z, 5));
        assert!(disjoint.matrix().max_abs() < 1e-14);
    }

    #[test]
    fn trimming_removes_identity_sites() {
        let op = Op::pauli(Pauli::Z, 2).on_support(&[0, 2, 5]).unwrap();
        let t = op.trimmed(1e-12);
        assert_eq!(t.support(), &[2]);
        assert!(t.max_abs_diff(&Op::pauli(Pauli::Z, 2)) < 1e-14);
        let zz = Op::pauli_string(&[(0, Pauli::Z), (1, Pauli::Z)]).unwrap();
        assert_eq!(zz.trimmed(1e-12).support(), &[0, 1]);
    }

    #[test]
    fn constructor_checks() {
        assert!(Op::new(vec![1, 0], CMatrix::identity(4)).is_err());
        assert!(Op::new(vec![0], CMatrix::identity(4)).is_err());
        assert!(Op::pauli_string(&[(0, Pauli::X), (0, Pauli::Z)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let op = Op::pauli_string(&[(1, Pauli::Y), (2, Pauli::X)]).unwrap();
        let s = serde_json::to_string(&op).unwrap();
        assert!(s.starts_with("{\"support\":[1,2]"));
        let back: Op = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
    }
}
