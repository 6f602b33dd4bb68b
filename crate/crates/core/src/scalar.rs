//! Coefficient rings used by the tensor and Lie algebra code.

use core::fmt::Debug;
use core::ops::{Add, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

/// Exact rational coefficients.
pub type Q = Ratio<i128>;

/// A commutative ring with division by small integers, which is all the
/// truncated exponential and logarithm need.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;
    fn one() -> Self {
        Self::from_i64(1)
    }
    fn div_int(&self, n: i64) -> Self;
    fn magnitude(&self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    #[inline]
    fn div_int(&self, n: i64) -> Self {
        self / n as f64
    }
    #[inline]
    fn magnitude(&self) -> f64 {
        libm::fabs(*self)
    }
}

impl Scalar for Q {
    fn from_i64(v: i64) -> Self {
        Q::from_integer(v as i128)
    }
    fn div_int(&self, n: i64) -> Self {
        self / Q::from_integer(n as i128)
    }
    fn magnitude(&self) -> f64 {
        libm::fabs(q_to_f64(self))
    }
}

pub fn q_to_f64(q: &Q) -> f64 {
    // i128 -> f64 is exact enough for every denominator this crate produces
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}
