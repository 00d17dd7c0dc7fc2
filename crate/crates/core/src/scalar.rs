//! Numeric abstractions shared by the exact engines.
//!
//! Two tiers:
//!
//! - [`Weight`]: anything a transition probability can be stored in. This
//!   covers `f32`, `f64` and the exact rationals [`Rational`] / [`Rational64`],
//!   so kernels and one-step laws can be built and compared with zero rounding.
//! - [`Scalar`]: a floating-point [`Weight`]. Entropies, logarithms and the
//!   divergence `d` need a real logarithm and therefore live here.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Sub};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, One, ToPrimitive, Zero};

/// Exact rational probability with 128-bit numerator and denominator.
pub type Rational = Ratio<i128>;

/// Exact rational probability with 64-bit numerator and denominator.
pub type Rational64 = Ratio<i64>;

/// A value type that can hold a probability mass.
pub trait Weight:
    Copy
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Allowed deviation of a total mass from one.
    const NORMALIZATION_TOL: f64;

    /// The probability `num / den`.
    fn ratio(num: u64, den: u64) -> Self;

    /// Lossy conversion used for reporting.
    fn as_f64(self) -> f64;

    fn abs_diff(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            other - self
        }
    }
}

impl Weight for f64 {
    const NORMALIZATION_TOL: f64 = 1e-12;
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
    fn as_f64(self) -> f64 {
        self
    }
}

impl Weight for f32 {
    const NORMALIZATION_TOL: f64 = 1e-5;
    fn ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Weight for Rational {
    const NORMALIZATION_TOL: f64 = 0.0;
    fn ratio(num: u64, den: u64) -> Self {
        Ratio::new(num as i128, den as i128)
    }
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Weight for Rational64 {
    const NORMALIZATION_TOL: f64 = 0.0;
    fn ratio(num: u64, den: u64) -> Self {
        Ratio::new(num as i64, den as i64)
    }
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

/// Floating-point weight: `f32` or `f64`.
pub trait Scalar: Weight + Float + FromPrimitive + Sum {
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite constant")
    }
}

impl<T> Scalar for T where T: Weight + Float + FromPrimitive + Sum {}

/// `x log x` with the convention `0 log 0 = 0`.
pub fn xlogx<S: Scalar>(x: S) -> S {
    if x <= S::zero() {
        S::zero()
    } else {
        x * x.ln()
    }
}

/// Neumaier-compensated running sum. Order-dependent only through the
/// order values are pushed, which callers keep fixed.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<S> {
    sum: S,
    comp: S,
}

impl<S: Scalar> Default for CompensatedSum<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> CompensatedSum<S> {
    pub fn new() -> Self {
        Self {
            sum: S::zero(),
            comp: S::zero(),
        }
    }

    pub fn add(&mut self, x: S) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn total(&self) -> S {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<S: Scalar, I: IntoIterator<Item = S>>(xs: I) -> S {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.total()
}

/// Plain left-to-right sum for any weight (exact for rationals).
pub fn weight_sum<W: Weight, I: IntoIterator<Item = W>>(xs: I) -> W {
    xs.into_iter().fold(W::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_ratio_is_exact() {
        let third = Rational::ratio(1, 3);
        assert_eq!(third + third + third, Rational::one());
    }

    #[test]
    fn xlogx_zero_branch() {
        assert_eq!(xlogx(0.0_f64), 0.0);
        assert!((xlogx(2.0_f64) - 2.0 * 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1.0_f64, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 0.0);
        assert!((compensated_sum(xs) - 4e-16).abs() < 1e-30);
    }

    #[test]
    fn abs_diff_symmetric() {
        assert_eq!(3.0_f64.abs_diff(5.0), 2.0);
        let a = Rational::ratio(1, 4);
        let b = Rational::ratio(1, 2);
        assert_eq!(a.abs_diff(b), b.abs_diff(a));
    }
}
