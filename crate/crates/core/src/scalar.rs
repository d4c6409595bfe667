//! Real scalar abstraction shared by every numeric module.
//!
//! All operator algebra, bound evaluators and the cluster simulator are
//! written against [`Real`] so the same code runs in `f64` (the default,
//! and the only precision the oracle tolerances are calibrated for), in
//! `f32` for cheap exploratory sweeps, or in double-double [`Dd`] when an
//! error has to be resolved below `f64` round-off.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

mod dd;
pub use dd::Dd;

/// Complex number over a [`Real`] scalar.
pub type C<R> = Complex<R>;

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this precision.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into this precision.
    fn count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    /// Sum of an iterator; some scalar types do not implement `Sum`.
    fn sum_of<I: IntoIterator<Item = Self>>(items: I) -> Self {
        items.into_iter().fold(Self::zero(), |a, b| a + b)
    }

    /// Lossy conversion to `f64` for reporting.
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Relative spacing of representable values near one.
    fn precision() -> Self {
        Self::epsilon()
    }

    /// Default absolute tolerance for structural checks (Hermiticity,
    /// unit norms, trace normalisation).
    fn tol() -> Self;
}

impl Real for f64 {
    fn tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn tol() -> Self {
        1e-5
    }
}

impl Real for Dd {
    fn tol() -> Self {
        Self::lit(1e-26)
    }
}

pub(crate) fn c_real<R: Real>(re: R) -> C<R> {
    Complex::new(re, R::zero())
}
