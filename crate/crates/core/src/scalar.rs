//! Floating-point abstraction shared by every numerical module.
//!
//! All of the probability machinery is written against [`Real`], which is
//! implemented for `f32` and `f64`. `erfc` comes from `libm`; its inverse is
//! seeded from `statrs` and polished with one Halley step in double precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Scalar type accepted by the numerical core.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Inverse of the complementary error function on (0, 2).
    fn erfc_inv(self) -> Self;

    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real converts to f64")
    }
}

fn erfc_inv_f64(y: f64) -> f64 {
    let x = statrs::function::erf::erfc_inv(y);
    if !x.is_finite() {
        return x;
    }
    // Halley step on erfc(x) - y = 0.
    let f = libm::erfc(x) - y;
    let d = -std::f64::consts::FRAC_2_SQRT_PI * (-x * x).exp();
    if d == 0.0 {
        return x;
    }
    let step = f / d;
    x - step / (1.0 + x * step)
}

impl Real for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    #[inline]
    fn erfc_inv(self) -> Self {
        erfc_inv_f64(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self as f64) as f32
    }

    #[inline]
    fn erfc_inv(self) -> Self {
        erfc_inv_f64(self as f64) as f32
    }
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf<T: Real>(z: T) -> T {
    T::lit(0.5) * (-z / T::SQRT_2()).erfc()
}

/// Standard normal upper tail `1 - Φ(z)`, accurate far into the tail.
#[inline]
pub fn norm_sf<T: Real>(z: T) -> T {
    T::lit(0.5) * (z / T::SQRT_2()).erfc()
}

/// Standard normal density.
#[inline]
pub fn norm_pdf<T: Real>(z: T) -> T {
    (-T::lit(0.5) * z * z).exp() / (T::TAU()).sqrt()
}

/// Standard normal quantile.
pub fn norm_quantile<T: Real>(p: T) -> T {
    -T::SQRT_2() * (T::lit(2.0) * p).erfc_inv()
}

/// Probability that a normal variate with mean `mean` and standard deviation
/// `sd` falls inside `[lo, hi]`, computed from whichever tail keeps relative
/// precision.
pub fn normal_interval_mass<T: Real>(lo: T, hi: T, mean: T, sd: T) -> T {
    if hi <= lo {
        return T::zero();
    }
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let mass = if a >= T::zero() {
        norm_sf(a) - norm_sf(b)
    } else if b <= T::zero() {
        norm_sf(-b) - norm_sf(-a)
    } else {
        T::one() - norm_sf(b) - norm_sf(-a)
    };
    mass.max(T::zero())
}

/// Running sum kept as Shewchuk's non-overlapping partials, so the rounded
/// total is exact and independent of the order of the additions.
#[derive(Clone, Debug, Default)]
pub struct ExactAccumulator<T> {
    partials: Vec<T>,
}

impl<T: Real> ExactAccumulator<T> {
    pub fn new() -> Self {
        ExactAccumulator { partials: Vec::new() }
    }

    pub fn add(&mut self, mut x: T) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != T::zero() {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Correctly rounded value of the sum so far.
    pub fn value(&self) -> T {
        let partials = &self.partials;
        let mut n = partials.len();
        if n == 0 {
            return T::zero();
        }
        n -= 1;
        let mut hi = partials[n];
        let mut lo = T::zero();
        while n > 0 {
            n -= 1;
            let x = hi;
            let y = partials[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != T::zero() {
                break;
            }
        }
        // Round-half-even correction across the remaining partials.
        if n > 0
            && ((lo < T::zero() && partials[n - 1] < T::zero())
                || (lo > T::zero() && partials[n - 1] > T::zero()))
        {
            let y = lo + lo;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

/// Correctly rounded sum of a sequence of finite values.
///
/// The result is independent of the order in which values are supplied, which
/// keeps Bel/Pl curves bit-identical under permutation of focal elements.
pub fn exact_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut acc = ExactAccumulator::new();
    for x in values {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_helpers_match_known_values() {
        assert!((norm_cdf(0.0f64) - 0.5).abs() < 1e-15);
        assert!((norm_cdf(1.959963984540054f64) - 0.975).abs() < 1e-12);
        assert!((norm_quantile(0.99f64) - 2.326347874040841).abs() < 1e-9);
        let tail = norm_sf(30.0f64);
        assert!((tail / 4.906713927148187e-198 - 1.0).abs() < 1e-9);
        assert!((norm_quantile(0.99f32) - 2.326_348).abs() < 1e-4);
        assert!((norm_quantile(0.975f64) - 1.959963984540054).abs() < 1e-13);
        assert!((norm_quantile(1e-10f64) + 6.361340902404056).abs() < 1e-11);
    }

    #[test]
    fn interval_mass_uses_tails() {
        let m = normal_interval_mass(10.0f64, 11.0, 0.0, 1.0);
        let expect = norm_sf(10.0f64) - norm_sf(11.0);
        assert!((m - expect).abs() <= 1e-12 * expect);
        assert!(m > 0.0);
        let full = normal_interval_mass(-50.0f64, 50.0, 0.0, 1.0);
        assert_eq!(full, 1.0);
    }

    #[test]
    fn exact_sum_is_order_independent() {
        let xs = [0.1f64, 1e16, 0.2, -1e16, 0.3, 1.0 / 3.0, 1e-20];
        let a = exact_sum(xs.iter().copied());
        let b = exact_sum(xs.iter().rev().copied());
        assert_eq!(a.to_bits(), b.to_bits());
        let c = exact_sum([0.1f64; 10]);
        assert_eq!(c, 1.0);
        assert_eq!(exact_sum(Vec::<f64>::new()), 0.0);
    }
}
