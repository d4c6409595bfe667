use super::SiteLayout;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{c_real, Real, C};

/// Initial state on qubits `0..n`.
#[derive(Clone, Debug)]
pub enum State<R: Real> {
    /// Tensor product of single-site density matrices.
    Product(Vec<CMatrix<R>>),
    /// State vector, site 0 most significant.
    Pure(Vec<C<R>>),
    Density(CMatrix<R>),
}

impl<R: Real> State<R> {
    /// `|0…0⟩`.
    pub fn all_zero(n: usize) -> Self {
        Self::product_pure(&vec![[C::new(R::one(), R::zero()), C::new(R::zero(), R::zero())]; n])
    }

    /// Computational basis state; `bits[i]` is the value of site `i`.
    pub fn basis(bits: &[bool]) -> Self {
        let (o, z) = (C::new(R::one(), R::zero()), C::new(R::zero(), R::zero()));
        let sites: Vec<[C<R>; 2]> = bits.iter().map(|&b| if b { [z, o] } else { [o, z] }).collect();
        Self::product_pure(&sites)
    }

    /// Product of normalised single-site vectors.
    pub fn product_pure(sites: &[[C<R>; 2]]) -> Self {
        State::Product(
            sites
                .iter()
                .map(|&[a, b]| {
                    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
                    let v = [a / c_real(n), b / c_real(n)];
                    CMatrix::from_fn(2, 2, |i, j| v[i] * v[j].conj())
                })
                .collect(),
        )
    }

    pub fn maximally_mixed(n: usize) -> Self {
        State::Product(vec![CMatrix::identity(2).scale_real(R::lit(0.5)); n])
    }

    pub fn num_sites(&self) -> usize {
        match self {
            State::Product(s) => s.len(),
            State::Pure(v) => v.len().trailing_zeros() as usize,
            State::Density(m) => m.rows().trailing_zeros() as usize,
        }
    }

    /// Checks normalisation, Hermiticity and positivity to `1e-10`.
    pub fn validate(&self) -> Result<()> {
        let tol = R::lit(1e-10).max(R::tol());
        let check_density = |m: &CMatrix<R>| -> Result<()> {
            if !m.is_square() || !m.rows().is_power_of_two() {
                return Err(Error::Shape("density matrix must be 2^n x 2^n".into()));
            }
            if (m.trace().re - R::one()).abs() > tol || m.trace().im.abs() > tol {
                return Err(Error::InvalidArgument("density matrix trace must be 1".into()));
            }
            let defect = m.hermiticity_defect();
            if defect > tol {
                return Err(Error::NotHermitian(defect.as_f64()));
            }
            let (vals, _) = m.eigh();
            if vals.first().is_some_and(|&v| v < -tol) {
                return Err(Error::InvalidArgument("density matrix is not positive".into()));
            }
            Ok(())
        };
        match self {
            State::Product(sites) => sites.iter().try_for_each(|m| {
                if m.rows() != 2 {
                    return Err(Error::Shape("product factors must be 2x2".into()));
                }
                check_density(m)
            }),
            State::Pure(v) => {
                if !v.len().is_power_of_two() {
                    return Err(Error::Shape("state vector length must be 2^n".into()));
                }
                let norm = R::sum_of(v.iter().map(|z| z.norm_sqr()));
                if (norm - R::one()).abs() > tol {
                    return Err(Error::InvalidArgument("state vector must be normalised".into()));
                }
                Ok(())
            }
            State::Density(m) => check_density(m),
        }
    }
}

/// Source of reduced density matrices of an initial state.
pub trait MarginalProvider<R: Real>: Sync {
    fn num_sites(&self) -> usize;

    /// Reduced density matrix on `sites` (ascending).
    fn marginal(&self, sites: &[usize]) -> Result<CMatrix<R>>;

    /// The marginal as a mixture `Σ p_k |φ_k⟩⟨φ_k|`; components with
    /// negligible weight are dropped.
    fn ensemble(&self, sites: &[usize]) -> Result<Vec<(R, Vec<C<R>>)>> {
        let rho = self.marginal(sites)?;
        let (vals, vecs) = rho.eigh();
        let cut = R::lit(1e-14);
        Ok(vals
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > cut)
            .map(|(k, &p)| (p, (0..vecs.rows()).map(|i| vecs[(i, k)]).collect()))
            .collect())
    }
}

fn check_sites(sites: &[usize], n: usize) -> Result<()> {
    if sites.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("marginal sites must be strictly increasing".into()));
    }
    match sites.iter().find(|&&s| s >= n) {
        Some(&s) => Err(Error::UnknownVertex(s)),
        None => Ok(()),
    }
}

/// Reduced density matrix of the pure state `psi` on `sites`.
pub fn partial_trace_pure<R: Real>(psi: &[C<R>], n: usize, sites: &[usize]) -> Result<CMatrix<R>> {
    check_sites(sites, n)?;
    let register: Vec<usize> = (0..n).collect();
    let layout = SiteLayout::new(&register, sites)?;
    let k = 1usize << sites.len();
    let mut rho = CMatrix::zeros(k, k);
    for base in (0..psi.len()).filter(|&i| i & layout.mask() == 0) {
        for a in 0..k {
            let pa = psi[base | layout.spread[a]];
            if pa.norm_sqr() == R::zero() {
                continue;
            }
            for b in 0..k {
                rho[(a, b)] = rho[(a, b)] + pa * psi[base | layout.spread[b]].conj();
            }
        }
    }
    Ok(rho)
}

impl<R: Real> MarginalProvider<R> for State<R> {
    fn num_sites(&self) -> usize {
        State::num_sites(self)
    }

    fn marginal(&self, sites: &[usize]) -> Result<CMatrix<R>> {
        let n = State::num_sites(self);
        check_sites(sites, n)?;
        match self {
            State::Product(f) => Ok(sites
                .iter()
                .fold(CMatrix::identity(1), |acc, &s| acc.kron(&f[s]))),
            State::Pure(psi) => partial_trace_pure(psi, n, sites),
            State::Density(m) => {
                let register: Vec<usize> = (0..n).collect();
                let layout = SiteLayout::new(&register, sites)?;
                let k = 1usize << sites.len();
                let mut rho = CMatrix::zeros(k, k);
                for base in (0..m.rows()).filter(|&i| i & layout.mask() == 0) {
                    for a in 0..k {
                        for b in 0..k {
                            rho[(a, b)] =
                                rho[(a, b)] + m[(base | layout.spread[a], base | layout.spread[b])];
                        }
                    }
                }
                Ok(rho)
            }
        }
    }

    fn ensemble(&self, sites: &[usize]) -> Result<Vec<(R, Vec<C<R>>)>> {
        let State::Product(f) = self else {
            let rho = self.marginal(sites)?;
            let (vals, vecs) = rho.eigh();
            return Ok(vals
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > R::lit(1e-14))
                .map(|(k, &p)| (p, (0..vecs.rows()).map(|i| vecs[(i, k)]).collect()))
                .collect());
        };
        check_sites(sites, f.len())?;
        let mut out: Vec<(R, Vec<C<R>>)> = vec![(R::one(), vec![C::new(R::one(), R::zero())])];
        for &s in sites {
            let (vals, vecs) = f[s].eigh();
            let comps: Vec<(R, [C<R>; 2])> = (0..2)
                .filter(|&k| vals[k] > R::lit(1e-14))
                .map(|k| (vals[k], [vecs[(0, k)], vecs[(1, k)]]))
                .collect();
            out = out
                .into_iter()
                .flat_map(|(p, v)| {
                    comps.iter().map(move |&(q, w)| {
                        let next: Vec<C<R>> =
                            v.iter().flat_map(|&a| [a * w[0], a * w[1]]).collect();
                        (p * q, next)
                    })
                })
                .collect();
        }
        Ok(out)
    }
}
