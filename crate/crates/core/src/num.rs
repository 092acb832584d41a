//! Scalar abstraction shared by the numeric modules.
//!
//! Everything that does arithmetic is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Complex values are `num_complex::Complex<T>`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Converts an `f64` constant. Panics only for values the type cannot hold.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_index(n: usize) -> Self {
        Self::from_usize(n).expect("index representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{j 2π turns}`, reducing the argument modulo one turn first so large
/// quadratic phases keep their precision.
#[inline]
pub fn cis_turns<T: Real>(turns: T) -> Complex<T> {
    let frac = turns - turns.round();
    let angle = T::TAU() * frac;
    Complex::new(angle.cos(), angle.sin())
}

/// `e^{j 2π k / n}` for integer `k`, reduced exactly in integer arithmetic.
#[inline]
pub fn cis_ratio<T: Real>(k: i64, n: usize) -> Complex<T> {
    let n_i = n as i64;
    let r = k.rem_euclid(n_i);
    cis_turns(T::from_i64(r).unwrap() / T::from_index(n))
}

#[inline]
pub fn norm_sqr_slice<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Euclidean distance between two complex vectors of equal length.
pub fn dist<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<T>()
        .sqrt()
}

/// Numerically stable `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln Σ e^{x_i}`; returns `-inf` for an empty slice.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cis_turns_reduces_large_arguments() {
        let a: Complex<f64> = cis_turns(1.0e6 + 0.25);
        assert!((a - Complex::new(0.0, 1.0)).norm() < 1e-9);
        let b: Complex<f64> = cis_ratio(-3, 4);
        assert!((b - Complex::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn log_sum_exp_matches_naive() {
        let xs = [0.1f64, -2.0, 3.5];
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-12);
        assert!((log_add_exp(0.1f64, 3.5) - (0.1f64.exp() + 3.5f64.exp()).ln()).abs() < 1e-12);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
    }
}
