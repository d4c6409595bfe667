//! Double-double scalar built on `twofloat`.
//!
//! `TwoFloat` division forms the reciprocal residual without a fused
//! multiply-add and loses roughly ten bits, and its `from_f64` truncates to
//! an integer. This wrapper delegates everything else and replaces both.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

/// Double-double scalar with about 31 significant digits.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd(pub TwoFloat);

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd(<TwoFloat as From<f64>>::from(x))
    }

    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    pub fn lo(self) -> f64 {
        self.0.lo()
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl PartialEq for Dd {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        Dd(self.0 + rhs.0)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        Dd(self.0 - rhs.0)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        Dd(self.0 * rhs.0)
    }
}

impl Div for Dd {
    type Output = Dd;
    // Three-step long division; each partial quotient is an f64 and the
    // remainders use exact f64-by-double-double products.
    fn div(self, rhs: Dd) -> Dd {
        let (a, b) = (self.0, rhs.0);
        let q1 = a.hi() / b.hi();
        if !q1.is_finite() || q1 == 0.0 {
            return Dd(<TwoFloat as From<f64>>::from(q1));
        }
        let r = a - b * q1;
        let q2 = r.hi() / b.hi();
        let r = r - b * q2;
        let q3 = r.hi() / b.hi();
        Dd(TwoFloat::new_add(q1, q2) + q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, rhs: Dd) -> Dd {
        self - (self / rhs).trunc() * rhs
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd(<TwoFloat as From<f64>>::from(0.0))
    }
    fn is_zero(&self) -> bool {
        self.0.hi() == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd(<TwoFloat as From<f64>>::from(1.0))
    }
}

impl Num for Dd {
    type FromStrRadixErr = num_traits::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        <f64 as Num>::from_str_radix(s, radix).map(Dd::new)
    }
}

impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.0.hi() + self.0.lo())
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Dd(TwoFloat::new_add(hi, lo)))
    }
    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Dd(TwoFloat::new_add(hi, lo)))
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(Dd::new(x))
    }
}

impl NumCast for Dd {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        n.to_f64().map(Dd::new)
    }
}

macro_rules! unary {
    ($($name:ident),*) => {
        $(fn $name(self) -> Self { Dd(<TwoFloat as Float>::$name(self.0)) })*
    };
}

macro_rules! binary {
    ($($name:ident),*) => {
        $(fn $name(self, other: Self) -> Self { Dd(<TwoFloat as Float>::$name(self.0, other.0)) })*
    };
}

macro_rules! predicate {
    ($($name:ident),*) => {
        $(fn $name(self) -> bool { <TwoFloat as Float>::$name(self.0) })*
    };
}

macro_rules! constant {
    ($($name:ident),*) => {
        $(fn $name() -> Self { Dd(<TwoFloat as Float>::$name()) })*
    };
}

impl Float for Dd {
    constant!(nan, infinity, neg_infinity, neg_zero, min_value, min_positive_value, max_value);
    predicate!(is_nan, is_infinite, is_finite, is_normal, is_sign_positive, is_sign_negative);
    unary!(
        floor, ceil, round, trunc, fract, abs, signum, sqrt, exp, exp2, ln, log2, log10, cbrt,
        sin, cos, tan, asin, acos, atan, exp_m1, ln_1p, sinh, cosh, tanh, asinh, acosh, atanh
    );
    binary!(max, min, abs_sub, hypot, atan2, log, powf);

    fn epsilon() -> Self {
        Dd::new(2f64.powi(-104))
    }

    fn classify(self) -> FpCategory {
        <TwoFloat as Float>::classify(self.0)
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = <TwoFloat as Float>::sin_cos(self.0);
        (Dd(s), Dd(c))
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        self.0.hi().integer_decode()
    }
}

macro_rules! consts {
    ($($name:ident),*) => {
        $(fn $name() -> Self { Dd(<TwoFloat as FloatConst>::$name()) })*
    };
}

impl FloatConst for Dd {
    consts!(
        E, FRAC_1_PI, FRAC_1_SQRT_2, FRAC_2_PI, FRAC_2_SQRT_PI, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4,
        FRAC_PI_6, FRAC_PI_8, LN_10, LN_2, LOG10_E, LOG2_E, PI, SQRT_2
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(x: Dd, hi: f64, lo: f64) -> f64 {
        ((x.hi() - hi) + (x.lo() - lo)).abs()
    }

    #[test]
    fn division_is_double_double_accurate() {
        // 1/3 and 0.1/0.3 (with 0.1, 0.3 as f64 values) against exact splits.
        let third = Dd::one() / Dd::new(3.0);
        assert!(err(third, 1.0 / 3.0, 1.850371707708594e-17) < 1e-32);
        let back = third * Dd::new(3.0) - Dd::one();
        assert!(back.abs() < Dd::new(1e-31));
        let q = Dd::new(0.1) / Dd::new(0.3);
        let r = q * Dd::new(0.3) - Dd::new(0.1);
        assert!(r.abs() < Dd::new(1e-32));
    }

    #[test]
    fn conversions() {
        assert_eq!(Dd::from_f64(0.25).unwrap().to_f64(), Some(0.25));
        let big = Dd::from_u64(u64::MAX).unwrap();
        assert_eq!(big.hi(), 18446744073709551616.0);
        assert_eq!(big.lo(), -1.0);
        assert_eq!(Dd::from_i64(-7).unwrap().to_f64(), Some(-7.0));
        assert_eq!(Dd::new(2.0).powi(-2).to_f64(), Some(0.25));
        assert_eq!((Dd::new(7.5) % Dd::new(2.0)).to_f64(), Some(1.5));
        assert!(Dd::epsilon() < Dd::new(1e-30));
    }
}
