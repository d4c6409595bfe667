//! Dense complex matrices and the Hermitian eigensolver behind the
//! exact-diagonalisation oracle.
//!
//! Storage is row-major. Basis ordering follows the Kronecker convention:
//! the first tensor factor is the most significant bit of the index.

use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{c_real, Real, C};

/// Dimension up to which spectral norms use a full eigendecomposition.
pub const DENSE_NORM_MAX_DIM: usize = 1 << 10;
const POWER_MAX_ITERS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<R>>,
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<R>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn diagonal(values: &[C<R>]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<R>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C<R>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C<R>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: R) -> Self {
        self.scale(c_real(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: C<R>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + *b * s;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        let n = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o = *o + a * *b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<R>]) -> Vec<C<R>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(C::<R>::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn trace(&self) -> C<R> {
        (0..self.rows.min(self.cols)).fold(C::<R>::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius_norm(&self) -> R {
        R::sum_of(self.data.iter().map(|x| x.norm_sqr())).sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, x| m.max(x.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> R {
        if !self.is_square() {
            return R::infinity();
        }
        let mut worst = R::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Spectral norm (largest singular value).
    pub fn spectral_norm(&self) -> R {
        if self.rows == 0 || self.cols == 0 {
            return R::zero();
        }
        if self.is_square() && self.rows <= DENSE_NORM_MAX_DIM {
            // Normal shortcuts: Hermitian or anti-Hermitian input.
            let scale = self.max_abs().max(R::min_positive_value());
            let herm = self.hermiticity_defect() <= R::tol() * scale;
            let anti = !herm && self.add(&self.adjoint()).max_abs() <= R::tol() * scale;
            if herm || anti {
                let m = if herm { self.clone() } else { self.scale(C::new(R::zero(), R::one())) };
                let vals = m.eigvalsh();
                let lo = vals.first().copied().unwrap_or_else(R::zero).abs();
                let hi = vals.last().copied().unwrap_or_else(R::zero).abs();
                return lo.max(hi);
            }
        }
        let gram = if self.rows >= self.cols {
            self.adjoint().matmul(self)
        } else {
            self.matmul(&self.adjoint())
        };
        let top = if gram.rows <= DENSE_NORM_MAX_DIM {
            gram.eigvalsh().last().copied().unwrap_or_else(R::zero)
        } else {
            power_iteration_top(&gram)
        };
        top.max(R::zero()).sqrt()
    }

    /// Eigendecomposition of a Hermitian matrix.
    ///
    /// Returns eigenvalues in ascending order and the matrix whose columns
    /// are the corresponding orthonormal eigenvectors. Householder reduction
    /// to a complex tridiagonal form, a diagonal phase change to make it
    /// real, then implicit QL with Wilkinson shifts.
    pub fn eigh(&self) -> (Vec<R>, CMatrix<R>) {
        assert!(self.is_square(), "eigh needs a square matrix");
        let n = self.rows;
        if n == 0 {
            return (Vec::new(), CMatrix::zeros(0, 0));
        }
        let two = R::lit(2.0);
        let Tridiagonal { mut diag, mut sub, phases, reflectors } = self.tridiagonalize();

        // Rows of `zt` are the columns of the rotation product.
        let mut zt = vec![R::zero(); n * n];
        for i in 0..n {
            zt[i * n + i] = R::one();
        }
        tridiagonal_ql(&mut diag, &mut sub, Some(&mut zt), n);

        // Eigenvectors: Q · D · Z.
        let mut vecs = CMatrix::from_fn(n, n, |i, j| phases[i] * c_real(zt[j * n + i]));
        let mut dots = vec![C::<R>::zero(); n];
        for (off, v) in reflectors.iter().rev() {
            dots.iter_mut().for_each(|d| *d = C::zero());
            for (j, vj) in v.iter().enumerate() {
                let vc = vj.conj();
                for (d, x) in dots.iter_mut().zip(vecs.row(off + j)) {
                    *d = *d + vc * *x;
                }
            }
            for (j, vj) in v.iter().enumerate() {
                let f = *vj * c_real(two);
                let row = off + j;
                for (x, d) in vecs.data[row * n..(row + 1) * n].iter_mut().zip(&dots) {
                    *x = *x - f * *d;
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| diag[i]).collect();
        let sorted = CMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
        (values, sorted)
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    pub fn eigvalsh(&self) -> Vec<R> {
        assert!(self.is_square(), "eigvalsh needs a square matrix");
        let n = self.rows;
        if n == 0 {
            return Vec::new();
        }
        let Tridiagonal { mut diag, mut sub, .. } = self.tridiagonalize();
        tridiagonal_ql(&mut diag, &mut sub, None, n);
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        diag
    }

    fn tridiagonalize(&self) -> Tridiagonal<R> {
        let n = self.rows;
        let mut a = self.clone();
        let mut reflectors: Vec<(usize, Vec<C<R>>)> = Vec::new();
        let two = R::lit(2.0);

        for k in 0..n.saturating_sub(2) {
            let len = n - k - 1;
            let x: Vec<C<R>> = (0..len).map(|i| a[(k + 1 + i, k)]).collect();
            let tail_sq = R::sum_of(x[1..].iter().map(|z| z.norm_sqr()));
            if tail_sq <= R::min_positive_value() {
                continue;
            }
            let xnorm = (x[0].norm_sqr() + tail_sq).sqrt();
            let phase = if x[0].norm() > R::zero() {
                x[0] / c_real(x[0].norm())
            } else {
                C::one()
            };
            let alpha = -phase * c_real(xnorm);
            let mut v = x;
            v[0] = v[0] - alpha;
            let vnorm = R::sum_of(v.iter().map(|z| z.norm_sqr())).sqrt();
            for z in v.iter_mut() {
                *z = *z / c_real(vnorm);
            }
            // A <- H A H with H = I - 2 v v^† acting on indices k+1..n.
            let off = k + 1;
            // Rows and columns before `k` are already reduced and untouched.
            let p: Vec<C<R>> = (0..n)
                .map(|i| {
                    if i < k {
                        return C::zero();
                    }
                    (0..len).fold(C::<R>::zero(), |acc, j| acc + a[(i, off + j)] * v[j])
                })
                .collect();
            // K = v^† (A v) restricted to the active block.
            let kk = (0..len).fold(C::<R>::zero(), |acc, j| acc + v[j].conj() * p[off + j]);
            // Rows outside the block only see the right multiplication.
            let mut w = p.clone();
            for j in 0..len {
                w[off + j] = w[off + j] - kk * v[j];
            }
            for i in k..n {
                let vi = if i >= off { v[i - off] } else { C::zero() };
                for j in k..n {
                    let vj = if j >= off { v[j - off] } else { C::zero() };
                    let upd = vi * w[j].conj() + w[i] * vj.conj();
                    if !upd.is_zero() {
                        a[(i, j)] = a[(i, j)] - upd * c_real(two);
                    }
                }
            }
            reflectors.push((off, v));
        }

        // Tridiagonal with complex sub-diagonal; rotate phases to make it real.
        let diag: Vec<R> = (0..n).map(|i| a[(i, i)].re).collect();
        let mut sub = vec![R::zero(); n];
        let mut phases = vec![C::<R>::one(); n];
        for k in 0..n - 1 {
            let beta = a[(k + 1, k)];
            let mag = beta.norm();
            sub[k] = mag;
            phases[k + 1] = if mag > R::zero() {
                phases[k] * beta / c_real(mag)
            } else {
                phases[k]
            };
        }

        Tridiagonal { diag, sub, phases, reflectors }
    }

    /// `f(self)` for Hermitian `self` via its eigendecomposition.
    pub fn hermitian_function(&self, f: impl Fn(R) -> C<R>) -> Self {
        let (vals, vecs) = self.eigh();
        let n = vals.len();
        let fv: Vec<C<R>> = vals.into_iter().map(f).collect();
        let scaled = CMatrix::from_fn(n, n, |i, j| vecs[(i, j)] * fv[j]);
        scaled.matmul(&vecs.adjoint())
    }
}

impl<R: Real> Index<(usize, usize)> for CMatrix<R> {
    type Output = C<R>;
    fn index(&self, (i, j): (usize, usize)) -> &C<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> IndexMut<(usize, usize)> for CMatrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<R> {
        &mut self.data[i * self.cols + j]
    }
}

struct Tridiagonal<R: Real> {
    diag: Vec<R>,
    sub: Vec<R>,
    phases: Vec<C<R>>,
    reflectors: Vec<(usize, Vec<C<R>>)>,
}

/// Implicit QL on a real symmetric tridiagonal matrix, accumulating
/// rotations into `z` when given; row `k` of `z` holds eigenvector `k`. `sub[k]` couples rows
/// `k` and `k+1`.
fn tridiagonal_ql<R: Real>(d: &mut [R], e: &mut [R], mut z: Option<&mut [R]>, n: usize) {
    if n < 2 {
        return;
    }
    let eps = R::precision();
    let two = R::lit(2.0);
    e[n - 1] = R::zero();
    // Running norm estimate; a purely relative test never deflates between
    // zero diagonal entries.
    let mut scale = R::zero();
    for l in 0..n {
        scale = scale.max(d[l].abs() + e[l].abs());
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = (d[m].abs() + d[m + 1].abs()).max(scale);
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 200, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(R::one());
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (R::one(), R::one(), R::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == R::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = R::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (head, tail) = z.split_at_mut((i + 1) * n);
                    let zi_row = &mut head[i * n..];
                    let zf_row = &mut tail[..n];
                    for (zi, zf) in zi_row.iter_mut().zip(zf_row.iter_mut()) {
                        let (a, b) = (*zi, *zf);
                        *zf = s * a + c * b;
                        *zi = c * a - s * b;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = R::zero();
        }
    }
}

fn power_iteration_top<R: Real>(gram: &CMatrix<R>) -> R {
    let n = gram.rows();
    // Deterministic, generic start vector with support on every basis state.
    let mut v: Vec<C<R>> = (0..n)
        .map(|i| c_real(R::one() + R::count(i % 7) / R::lit(13.0)))
        .collect();
    let mut lambda = R::zero();
    for _ in 0..POWER_MAX_ITERS {
        let norm = R::sum_of(v.iter().map(|z| z.norm_sqr())).sqrt();
        if norm == R::zero() {
            return R::zero();
        }
        for z in v.iter_mut() {
            *z = *z / c_real(norm);
        }
        let w = gram.matvec(&v);
        let next: R = v.iter().zip(&w).fold(C::<R>::zero(), |acc, (a, b)| acc + a.conj() * *b).re;
        v = w;
        if (next - lambda).abs() <= R::lit(1e-10) * next.abs().max(R::one()) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Real symmetric matrix exponential `exp(s·M)` via [`CMatrix::eigh`].
pub fn real_symmetric_exp<R: Real>(m: &[Vec<R>], s: R) -> Vec<Vec<R>> {
    let n = m.len();
    let cm = CMatrix::from_fn(n, n, |i, j| c_real(m[i][j]));
    let e = cm.hermitian_function(|x| c_real((s * x).exp()));
    (0..n).map(|i| (0..n).map(|j| e[(i, j)].re).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw = CMatrix::from_fn(n, n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        raw.add(&raw.adjoint()).scale_real(0.5)
    }

    #[test]
    fn eigvalsh_matches_eigh() {
        for (n, seed) in [(1, 11), (5, 12), (40, 13)] {
            let h = random_hermitian(n, seed);
            let (vals, _) = h.eigh();
            for (a, b) in vals.iter().zip(h.eigvalsh()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ql_deflates_between_zero_diagonals() {
        // Zero diagonal with off-diagonals spanning many orders of magnitude.
        let n = 6;
        let e = [1.0, 1e-200, 1e-310, 2.0, 1e-30];
        let mut d = vec![0.0f64; n];
        let mut sub = e.to_vec();
        sub.push(0.0);
        tridiagonal_ql(&mut d, &mut sub, None, n);
        d.sort_by(f64::total_cmp);
        assert!((d[5] - 2.0).abs() < 1e-14 && (d[0] + 2.0).abs() < 1e-14);
        let block = CMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                c_real(e[i.min(j)])
            } else {
                c_real(0.0)
            }
        });
        assert!((block.spectral_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (7, 4), (24, 5), (65, 6)] {
            let h = random_hermitian(n, seed);
            let (vals, vecs) = h.eigh();
            let d = CMatrix::diagonal(&vals.iter().map(|&x| c_real(x)).collect::<Vec<_>>());
            let back = vecs.matmul(&d).matmul(&vecs.adjoint());
            assert!(back.sub(&h).max_abs() < 1e-12, "n={n}");
            let gram = vecs.adjoint().matmul(&vecs);
            assert!(gram.sub(&CMatrix::identity(n)).max_abs() < 1e-12);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigh_handles_diagonal_and_degenerate_input() {
        let h = CMatrix::<f64>::diagonal(&[c_real(3.0), c_real(-1.0), c_real(3.0), c_real(0.0)]);
        let (vals, _) = h.eigh();
        assert_eq!(vals, vec![-1.0, 0.0, 3.0, 3.0]);
        let (vals, vecs) = CMatrix::<f64>::identity(5).eigh();
        assert!(vals.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(vecs.adjoint().matmul(&vecs).sub(&CMatrix::identity(5)).max_abs() < 1e-14);
    }

    #[test]
    fn pauli_sum_norm_is_sqrt_two() {
        // X + Z has eigenvalues ±√2.
        let m = CMatrix::<f64>::from_row_major(
            2,
            2,
            vec![c_real(1.0), c_real(1.0), c_real(1.0), c_real(-1.0)],
        )
        .unwrap();
        assert!((m.spectral_norm() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_dense_norm() {
        let h = random_hermitian(40, 9);
        let gram = h.adjoint().matmul(&h);
        let dense = gram.eigh().0.last().copied().unwrap();
        let power = power_iteration_top(&gram);
        assert!((dense - power).abs() / dense < 1e-8);
    }

    #[test]
    fn kron_ordering_first_factor_most_significant() {
        let a = CMatrix::<f64>::diagonal(&[c_real(1.0), c_real(2.0)]);
        let b = CMatrix::<f64>::diagonal(&[c_real(1.0), c_real(10.0)]);
        let k = a.kron(&b);
        assert_eq!(k[(1, 1)].re, 10.0);
        assert_eq!(k[(2, 2)].re, 2.0);
    }

    #[test]
    fn real_exp_matches_taylor() {
        let m = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]];
        let e = real_symmetric_exp(&m, 0.6);
        // Truncated Taylor series.
        let mut term = vec![vec![0.0; 3]; 3];
        let mut acc = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            term[i][i] = 1.0;
            acc[i][i] = 1.0;
        }
        for k in 1..40 {
            let mut next = vec![vec![0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    next[i][j] = (0..3).map(|l| term[i][l] * m[l][j]).sum::<f64>() * 0.6 / k as f64;
                }
            }
            term = next;
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += term[i][j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((acc[i][j] - e[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f32_eigh_is_usable() {
        let h = CMatrix::<f32>::from_row_major(
            2,
            2,
            vec![c_real(0.0), c_real(1.0), c_real(1.0), c_real(0.0)],
        )
        .unwrap();
        let (vals, _) = h.eigh();
        assert!((vals[0] + 1.0).abs() < 1e-6 && (vals[1] - 1.0).abs() < 1e-6);
    }
}
