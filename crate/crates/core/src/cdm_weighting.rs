//! Per-CDM weights from an exponential law fitted to the normalised
//! covariance determinant, `y' = C e^{A t'} + B` with `A, B, C ≥ 0`.
//!
//! `t'` maps the earliest CDM of a sequence to 0 and the latest to 1; `y'` is
//! the combined-covariance determinant divided by its maximum over the
//! sequence. Each CDM is weighted by `1 / y'(t')` of the fitted law.

use serde::{Deserialize, Serialize};

use crate::cdm_model::EventSequence;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest growth rate considered by the fit.
const A_MAX: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightLaw<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    /// Root-sum-square residual of the fit.
    pub residual: T,
    /// Set when too few points were available and the uniform law was used.
    pub fallback: bool,
}

impl<T: Real> WeightLaw<T> {
    pub fn uniform() -> Self {
        WeightLaw {
            a: T::zero(),
            b: T::one(),
            c: T::zero(),
            residual: T::zero(),
            fallback: true,
        }
    }

    pub fn eval(&self, t: T) -> T {
        self.c * (self.a * t).exp() + self.b
    }
}

/// Extremes used to normalise a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization<T> {
    pub t_min: T,
    pub t_max: T,
    pub det_max: T,
}

impl<T: Real> Normalization<T> {
    pub fn of(seq: &EventSequence<T>) -> Result<Self> {
        let mut t_min = T::infinity();
        let mut t_max = T::neg_infinity();
        let mut det_max = T::zero();
        for (i, c) in seq.cdms.iter().enumerate() {
            let det = c.cov.det();
            if !(det > T::zero()) {
                return Err(Error::validation(
                    format!("event {}, cdm {}", seq.event_id, i + 1),
                    format!("covariance determinant {det} is not positive"),
                ));
            }
            det_max = det_max.max(det);
            t_min = t_min.min(c.t2tca);
            t_max = t_max.max(c.t2tca);
        }
        Ok(Normalization { t_min, t_max, det_max })
    }

    /// Dimensionless time; a single epoch maps to 1.
    pub fn t_prime(&self, t2tca: T) -> T {
        if self.t_min == self.t_max {
            T::one()
        } else {
            (t2tca - self.t_max) / (self.t_min - self.t_max)
        }
    }
}

/// `(t', y')` for every CDM of the sequence, in sequence order.
pub fn normalize_sequence<T: Real>(seq: &EventSequence<T>) -> Result<Vec<(T, T)>> {
    let n = Normalization::of(seq)?;
    Ok(seq
        .cdms
        .iter()
        .map(|c| (n.t_prime(c.t2tca), c.cov.det() / n.det_max))
        .collect())
}

/// Best non-negative `(B, C)` for a fixed `A`, with its squared residual.
fn solve_linear<T: Real>(points: &[(T, T)], a: T) -> (T, T, T) {
    let n = T::from_usize(points.len()).unwrap();
    let sse = |b: T, c: T| -> T {
        points
            .iter()
            .map(|&(t, y)| {
                let r = c * (a * t).exp() + b - y;
                r * r
            })
            .sum()
    };
    let sy: T = points.iter().map(|p| p.1).sum();
    let mean = sy / n;
    let mut best = (mean.max(T::zero()), T::zero());
    let mut best_err = sse(best.0, best.1);
    if a == T::zero() {
        return (best.0, best.1, best_err);
    }
    let (mut s1, mut s11, mut s1y) = (T::zero(), T::zero(), T::zero());
    for &(t, y) in points {
        let e = (a * t).exp();
        s1 = s1 + e;
        s11 = s11 + e * e;
        s1y = s1y + e * y;
    }
    let mut candidates = Vec::with_capacity(2);
    let det = n * s11 - s1 * s1;
    if det > T::epsilon() * n * s11 {
        let b = (s11 * sy - s1 * s1y) / det;
        let c = (n * s1y - s1 * sy) / det;
        if b >= T::zero() && c >= T::zero() {
            candidates.push((b, c));
        }
    }
    if s11 > T::zero() {
        candidates.push((T::zero(), (s1y / s11).max(T::zero())));
    }
    for (b, c) in candidates {
        let e = sse(b, c);
        if e < best_err {
            best = (b, c);
            best_err = e;
        }
    }
    (best.0, best.1, best_err)
}

/// Non-negative least-squares fit of `y' = C e^{A t'} + B`.
///
/// For fixed `A` the problem is linear in `(B, C)` and solved exactly; the
/// remaining one-dimensional residual is scanned over `[0, 50]` and polished
/// by golden-section search. Exact ties keep the smallest `A`. Fewer than
/// three points yield the uniform law with `fallback` set.
pub fn fit_weight_law<T: Real>(points: &[(T, T)]) -> WeightLaw<T> {
    if points.len() < 3 {
        return WeightLaw::uniform();
    }
    let mut grid: Vec<T> = vec![T::zero()];
    let steps = 96;
    for i in 0..=steps {
        // Geometric from 1e-3 to A_MAX.
        let f = i as f64 / steps as f64;
        grid.push(T::lit(1e-3 * (A_MAX / 1e-3).powf(f)));
    }
    for g in [0.1, 1.0, 3.0] {
        grid.push(T::lit(g));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let errs: Vec<T> = grid.iter().map(|&a| solve_linear(points, a).2).collect();
    let mut best_i = 0;
    for i in 1..grid.len() {
        if errs[i] < errs[best_i] {
            best_i = i;
        }
    }
    let mut a_best = grid[best_i];
    let mut e_best = errs[best_i];
    if best_i > 0 {
        let mut lo = grid[best_i - 1];
        let mut hi = grid[(best_i + 1).min(grid.len() - 1)];
        let g = T::lit(0.618_033_988_749_894_8);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = solve_linear(points, x1).2;
        let mut f2 = solve_linear(points, x2).2;
        for _ in 0..200 {
            if hi - lo <= T::lit(1e-12) * (T::one() + hi.abs()) {
                break;
            }
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = solve_linear(points, x1).2;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = solve_linear(points, x2).2;
            }
        }
        let (x, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        if f < e_best {
            a_best = x;
            e_best = f;
        }
    }
    let (b, c, err) = solve_linear(points, a_best);
    debug_assert!(err <= e_best || (err - e_best).abs() <= T::epsilon());
    WeightLaw {
        a: a_best,
        b,
        c,
        residual: err.sqrt(),
        fallback: false,
    }
}

/// Unnormalised weights `1 / y'(t'_i)`, in sequence order.
pub fn cdm_weights<T: Real>(law: &WeightLaw<T>, seq: &EventSequence<T>) -> Result<Vec<T>> {
    if law.b == T::zero() && law.c == T::zero() {
        return Err(Error::DegenerateLaw);
    }
    let norm = Normalization::of(seq)?;
    seq.cdms
        .iter()
        .map(|c| {
            let y = law.eval(norm.t_prime(c.t2tca));
            if y > T::zero() && y.is_finite() {
                Ok(y.recip())
            } else {
                Err(Error::DegenerateLaw)
            }
        })
        .collect()
}

/// Fits the law on `seq` and returns it with the per-CDM weights.
pub fn sequence_weights<T: Real>(seq: &EventSequence<T>) -> Result<(WeightLaw<T>, Vec<T>)> {
    let points = normalize_sequence(seq)?;
    let law = fit_weight_law(&points);
    let w = cdm_weights(&law, seq)?;
    Ok((law, w))
}
