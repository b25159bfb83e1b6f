//! Per-variable probability boxes built from a weighted sample.
//!
//! The weighted eCDF is widened by the DKW band, each side of the band is
//! approximated by a Gaussian mixture centred on the samples, and the
//! resulting pair of CDFs is sliced by equally spaced α-cuts into intervals
//! of equal mass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{exact_sum, norm_cdf, norm_pdf, norm_quantile, Real};

/// Points of the least-squares grid used by the mixture fit.
pub const FIT_GRID_POINTS: usize = 512;

/// Probability left outside the support on each side.
pub const SUPPORT_TAIL: f64 = 0.01;

const LM_MAX_ITER: usize = 60;

/// Residual multiplier where a fit leaves the band on its own side.
const BAND_PENALTY: f64 = 10.0;

/// Sorted sample with normalised weights; equal values are merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEcdf<T> {
    pub samples: Vec<(T, T)>,
    /// Number of raw observations, before merging.
    pub n_raw: usize,
}

impl<T: Real> WeightedEcdf<T> {
    /// Right-continuous step value at `x`.
    pub fn eval(&self, x: T) -> T {
        let k = self.samples.partition_point(|s| s.0 <= x);
        if k == self.samples.len() {
            T::one()
        } else {
            exact_sum(self.samples[..k].iter().map(|s| s.1))
        }
    }

    pub fn min(&self) -> T {
        self.samples[0].0
    }

    pub fn max(&self) -> T {
        self.samples[self.samples.len() - 1].0
    }
}

pub fn weighted_ecdf<T: Real>(values: &[T], weights: &[T]) -> Result<WeightedEcdf<T>> {
    if values.is_empty() {
        return Err(Error::Domain("empirical CDF of an empty sample".into()));
    }
    if values.len() != weights.len() {
        return Err(Error::Domain(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > T::zero() && w.is_finite())) {
        return Err(Error::Domain(format!("sample weight {w} is not positive")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample value".into()));
    }
    let total = exact_sum(weights.iter().copied());
    let mut pairs: Vec<(T, T)> = values.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
    let mut samples: Vec<(T, T)> = Vec::with_capacity(pairs.len());
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        let j = i + pairs[i..].partition_point(|p| p.0 == v);
        let w = exact_sum(pairs[i..j].iter().map(|p| p.1)) / total;
        samples.push((v, w));
        i = j;
    }
    Ok(WeightedEcdf {
        samples,
        n_raw: values.len(),
    })
}

/// Half-width of the DKW band for `n` observations at confidence `1 - delta`.
pub fn dkw_epsilon<T: Real>(n: usize, delta: T) -> T {
    ((T::lit(2.0) / delta).ln() / (T::lit(2.0) * T::from_usize(n).unwrap())).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DkwBand<T> {
    pub epsilon: T,
    pub delta: T,
    pub ecdf: WeightedEcdf<T>,
}

impl<T: Real> DkwBand<T> {
    pub fn lower(&self, x: T) -> T {
        (self.ecdf.eval(x) - self.epsilon).max(T::zero())
    }

    pub fn upper(&self, x: T) -> T {
        (self.ecdf.eval(x) + self.epsilon).min(T::one())
    }
}

pub fn dkw_band<T: Real>(ecdf: &WeightedEcdf<T>, delta: T) -> Result<DkwBand<T>> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Domain(format!("delta {delta} outside (0, 1)")));
    }
    if ecdf.n_raw == 0 {
        return Err(Error::Domain("DKW band of an empty sample".into()));
    }
    Ok(DkwBand {
        epsilon: dkw_epsilon(ecdf.n_raw, delta),
        delta,
        ecdf: ecdf.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component<T> {
    pub centre: T,
    pub weight: T,
    pub sd: T,
}

/// CDF of a finite Gaussian mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureCdf<T> {
    pub components: Vec<Component<T>>,
}

impl<T: Real> MixtureCdf<T> {
    pub fn eval(&self, x: T) -> T {
        let s: T = self
            .components
            .iter()
            .map(|c| c.weight * norm_cdf((x - c.centre) / c.sd))
            .sum();
        s.max(T::zero()).min(T::one())
    }

    /// Infimum of `x` with `eval(x) >= alpha`, by bisection.
    pub fn inverse(&self, alpha: T) -> T {
        let max_sd = self.components.iter().fold(T::zero(), |m, c| m.max(c.sd));
        let pad = T::lit(40.0) * max_sd;
        let mut lo = self.components.iter().fold(T::infinity(), |m, c| m.min(c.centre)) - pad;
        let mut hi = self.components.iter().fold(T::neg_infinity(), |m, c| m.max(c.centre)) + pad;
        if self.eval(lo) >= alpha {
            return lo;
        }
        for _ in 0..200 {
            let mid = T::lit(0.5) * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.eval(mid) >= alpha {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Upper and lower CDF bounds of one variable with a truncated support.
///
/// Evaluation goes through [`PBox::upper_cdf`] and [`PBox::lower_cdf`], which
/// take the pointwise max and min of the two fits, so crossing fits are
/// repaired without refitting. `crossing` records the largest violation seen
/// on the fit grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PBox<T> {
    pub upper: MixtureCdf<T>,
    pub lower: MixtureCdf<T>,
    pub support: [T; 2],
    pub crossing: T,
    pub upper_residual: T,
    pub lower_residual: T,
}

impl<T: Real> PBox<T> {
    pub fn upper_cdf(&self, x: T) -> T {
        self.upper.eval(x).max(self.lower.eval(x))
    }

    pub fn lower_cdf(&self, x: T) -> T {
        self.upper.eval(x).min(self.lower.eval(x))
    }

    fn upper_inverse(&self, alpha: T) -> T {
        self.upper.inverse(alpha).min(self.lower.inverse(alpha))
    }

    fn lower_inverse(&self, alpha: T) -> T {
        self.upper.inverse(alpha).max(self.lower.inverse(alpha))
    }
}

/// Intervals of equal mass produced by α-cuts of a p-box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet<T> {
    pub intervals: Vec<[T; 2]>,
    pub bpa_per_interval: T,
}

/// Length scale used when every sample has the same value.
fn collapsed_scale<T: Real>(x: T) -> T {
    T::lit(1e-6) * x.abs().max(T::one())
}

struct Problem<'a, T> {
    centres: &'a [T],
    grid: &'a [T],
    target: &'a [T],
    sd_min: T,
    log_sd_max: T,
    /// +1 for the upper bound (penalise overshoot), -1 for the lower.
    side: T,
}

impl<T: Real> Problem<'_, T> {
    fn n(&self) -> usize {
        self.centres.len()
    }

    fn weights(&self, theta: &[T]) -> Vec<T> {
        let n = self.n();
        let m = theta[..n].iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let e: Vec<T> = theta[..n].iter().map(|&a| (a - m).exp()).collect();
        let s: T = e.iter().copied().sum();
        e.into_iter().map(|x| x / s).collect()
    }

    fn sds(&self, theta: &[T]) -> Vec<T> {
        theta[self.n()..].iter().map(|&s| self.sd_min + s.exp()).collect()
    }

    fn residuals(&self, theta: &[T]) -> Vec<T> {
        let w = self.weights(theta);
        let sd = self.sds(theta);
        self.grid
            .iter()
            .zip(self.target)
            .map(|(&x, &y)| {
                let p: T = (0..self.n()).map(|i| w[i] * norm_cdf((x - self.centres[i]) / sd[i])).sum();
                (p - y) * self.scale(p - y)
            })
            .collect()
    }

    fn scale(&self, d: T) -> T {
        if self.side * d > T::zero() {
            T::lit(BAND_PENALTY)
        } else {
            T::one()
        }
    }

    fn sse(&self, theta: &[T]) -> T {
        self.residuals(theta).iter().map(|&r| r * r).sum()
    }

    /// Residuals and the row-major Jacobian.
    fn jacobian(&self, theta: &[T]) -> (Vec<T>, Vec<T>) {
        let n = self.n();
        let w = self.weights(theta);
        let sd = self.sds(theta);
        let mut r = Vec::with_capacity(self.grid.len());
        let mut jac = vec![T::zero(); self.grid.len() * 2 * n];
        let mut cdf = vec![T::zero(); n];
        for (row, (&x, &y)) in self.grid.iter().zip(self.target).enumerate() {
            let mut p = T::zero();
            for i in 0..n {
                cdf[i] = norm_cdf((x - self.centres[i]) / sd[i]);
                p = p + w[i] * cdf[i];
            }
            let k = self.scale(p - y);
            r.push((p - y) * k);
            let base = row * 2 * n;
            for j in 0..n {
                jac[base + j] = k * w[j] * (cdf[j] - p);
                let z = (x - self.centres[j]) / sd[j];
                jac[base + n + j] = -k * w[j] * norm_pdf(z) * z / sd[j] * theta[n + j].exp();
            }
        }
        (r, jac)
    }

    fn clamp(&self, theta: &mut [T]) {
        let n = self.n();
        for s in &mut theta[n..] {
            *s = s.max(T::lit(-80.0)).min(self.log_sd_max);
        }
    }
}

/// Solves `a x = b` for symmetric positive definite `a` (row-major, `m×m`).
fn cholesky_solve<T: Real>(a: &mut [T], b: &mut [T], m: usize) -> bool {
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d = d - a[j * m + k] * a[j * m + k];
        }
        if !(d > T::zero()) {
            return false;
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s = s - a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
    }
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s = s - a[i * m + k] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = b[i];
        for k in i + 1..m {
            s = s - a[k * m + i] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
    true
}

/// Levenberg–Marquardt on softmax weight logits and log standard deviations.
fn levenberg_marquardt<T: Real>(prob: &Problem<'_, T>, mut theta: Vec<T>) -> (Vec<T>, T) {
    let m = theta.len();
    prob.clamp(&mut theta);
    let mut sse = prob.sse(&theta);
    let mut lambda = T::lit(1e-3);
    for _ in 0..LM_MAX_ITER {
        let (r, jac) = prob.jacobian(&theta);
        let mut jtj = vec![T::zero(); m * m];
        let mut jtr = vec![T::zero(); m];
        for (row, &ri) in r.iter().enumerate() {
            let jr = &jac[row * m..(row + 1) * m];
            for a in 0..m {
                if jr[a] == T::zero() {
                    continue;
                }
                jtr[a] = jtr[a] + jr[a] * ri;
                for b in 0..=a {
                    jtj[a * m + b] = jtj[a * m + b] + jr[a] * jr[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                jtj[b * m + a] = jtj[a * m + b];
            }
        }
        let grad_norm = jtr.iter().fold(T::zero(), |g, &x| g.max(x.abs()));
        if grad_norm < T::lit(1e-14) {
            break;
        }
        let mut accepted = false;
        while lambda < T::lit(1e12) {
            let mut a = jtj.clone();
            for d in 0..m {
                a[d * m + d] = a[d * m + d] * (T::one() + lambda) + lambda * T::lit(1e-12);
            }
            let mut step: Vec<T> = jtr.iter().map(|&g| -g).collect();
            if cholesky_solve(&mut a, &mut step, m) {
                let mut cand: Vec<T> = theta.iter().zip(&step).map(|(&t, &s)| t + s).collect();
                prob.clamp(&mut cand);
                let cand_sse = prob.sse(&cand);
                if cand_sse.is_finite() && cand_sse < sse {
                    let gain = (sse - cand_sse) / sse.max(T::min_positive_value());
                    theta = cand;
                    sse = cand_sse;
                    lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                    accepted = true;
                    if gain < T::lit(1e-6) {
                        return (theta, sse);
                    }
                    break;
                }
            }
            lambda = lambda * T::lit(4.0);
        }
        if !accepted {
            break;
        }
    }
    (theta, sse)
}

fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let d = T::from_usize(n - 1).unwrap();
    (0..n).map(|i| a + (b - a) * T::from_usize(i).unwrap() / d).collect()
}

/// Fits one mixture to `target` sampled on `grid`; returns the fit and its
/// sum of squared residuals. Residuals that leave the band on the fitted side
/// are amplified so the fit stays inside the band where it can.
fn fit_side<T: Real>(
    ecdf: &WeightedEcdf<T>,
    grid: &[T],
    target: &[T],
    sd_min: T,
    sd_base: T,
    side: T,
) -> Result<(MixtureCdf<T>, T)> {
    let centres: Vec<T> = ecdf.samples.iter().map(|s| s.0).collect();
    let n = centres.len();
    let width = grid[grid.len() - 1] - grid[0];
    let prob = Problem {
        centres: &centres,
        grid,
        target,
        sd_min,
        log_sd_max: (T::lit(10.0) * width.max(sd_base)).ln(),
        side,
    };
    let log_sd = |f: f64| (sd_base * T::lit(f) - sd_min).max(sd_min).ln();
    let jump_logits: Vec<T> = ecdf.samples.iter().map(|s| s.1.ln()).collect();
    let inits: [(bool, f64); 4] = [(false, 1.0), (false, 0.5), (false, 1.5), (true, 1.0)];
    let mut best: Option<(Vec<T>, T)> = None;
    for (use_jumps, f) in inits {
        let mut theta = Vec::with_capacity(2 * n);
        if use_jumps {
            theta.extend(jump_logits.iter().copied());
        } else {
            theta.extend(std::iter::repeat_n(T::zero(), n));
        }
        theta.extend(std::iter::repeat_n(log_sd(f), n));
        let (t, sse) = levenberg_marquardt(&prob, theta);
        if sse.is_finite() && best.as_ref().is_none_or(|b| sse < b.1) {
            best = Some((t, sse));
        }
    }
    let (theta, sse) = best.ok_or(Error::FitFailure { residual: f64::INFINITY })?;
    let w = prob.weights(&theta);
    let sd = prob.sds(&theta);
    let components = (0..n)
        .map(|i| Component {
            centre: centres[i],
            weight: w[i],
            sd: sd[i],
        })
        .collect();
    Ok((MixtureCdf { components }, sse))
}

/// Fits Gaussian mixtures to both sides of the band and derives the support.
pub fn fit_pbox<T: Real>(ecdf: &WeightedEcdf<T>, band: &DkwBand<T>) -> Result<PBox<T>> {
    let (lo, hi) = (ecdf.min(), ecdf.max());
    let spread = hi - lo;
    let (sd_min, scale) = if spread > T::zero() {
        (T::lit(1e-6) * spread, spread)
    } else {
        (T::lit(1e-6), collapsed_scale(lo))
    };
    let grid = linspace(lo - T::lit(4.0) * scale, hi + T::lit(4.0) * scale, FIT_GRID_POINTS);
    let up_target: Vec<T> = grid.iter().map(|&x| band.upper(x)).collect();
    let lo_target: Vec<T> = grid.iter().map(|&x| band.lower(x)).collect();
    let n = T::from_usize(ecdf.samples.len()).unwrap();
    let sd_base = (band.epsilon * scale / n.sqrt()).max(T::lit(2.0) * sd_min);

    let (upper, up_sse) = fit_side(ecdf, &grid, &up_target, sd_min, sd_base, T::one())?;
    let (lower, lo_sse) = fit_side(ecdf, &grid, &lo_target, sd_min, sd_base, -T::one())?;

    let crossing = grid
        .iter()
        .fold(T::zero(), |m, &x| m.max(lower.eval(x) - upper.eval(x)));
    if crossing > T::zero() {
        log::debug!("p-box fits cross by {crossing}; using pointwise envelope");
    }

    let z = norm_quantile(T::one() - T::lit(SUPPORT_TAIL));
    let first = |m: &MixtureCdf<T>| m.components[0].centre - z * m.components[0].sd;
    let last = |m: &MixtureCdf<T>| {
        let c = m.components[m.components.len() - 1];
        c.centre + z * c.sd
    };
    let support = [first(&upper).min(first(&lower)), last(&upper).max(last(&lower))];
    let rms = |sse: T| (sse / T::from_usize(FIT_GRID_POINTS).unwrap()).sqrt();
    Ok(PBox {
        upper,
        lower,
        support,
        crossing,
        upper_residual: rms(up_sse),
        lower_residual: rms(lo_sse),
    })
}

/// Slices the p-box at levels `k / (n_cuts + 1)`.
///
/// Interval `k` runs from the generalised inverse of the upper bound at
/// `α_k` to that of the lower bound at `α_{k+1}`, with the outermost ends
/// pinned to the support. Every interval carries mass `1 / (n_cuts + 1)`.
pub fn alpha_cut_intervals<T: Real>(pbox: &PBox<T>, n_cuts: usize) -> Result<IntervalSet<T>> {
    if n_cuts == 0 {
        return Err(Error::Domain("at least one alpha-cut is required".into()));
    }
    let count = n_cuts + 1;
    let denom = T::from_usize(count).unwrap();
    let [s_lo, s_hi] = pbox.support;
    let clamp = |x: T| x.max(s_lo).min(s_hi);
    let intervals = (0..count)
        .map(|k| {
            let lo = if k == 0 {
                s_lo
            } else {
                clamp(pbox.upper_inverse(T::from_usize(k).unwrap() / denom))
            };
            let hi = if k + 1 == count {
                s_hi
            } else {
                clamp(pbox.lower_inverse(T::from_usize(k + 1).unwrap() / denom))
            };
            [lo, hi.max(lo)]
        })
        .collect();
    Ok(IntervalSet {
        intervals,
        bpa_per_interval: denom.recip(),
    })
}

/// Weighted eCDF, DKW band, fitted p-box and α-cut intervals in one call.
pub fn build_intervals<T: Real>(
    values: &[T],
    weights: &[T],
    delta: T,
    n_cuts: usize,
) -> Result<(PBox<T>, IntervalSet<T>)> {
    let ecdf = weighted_ecdf(values, weights)?;
    let band = dkw_band(&ecdf, delta)?;
    let pbox = fit_pbox(&ecdf, &band)?;
    let set = alpha_cut_intervals(&pbox, n_cuts)?;
    Ok((pbox, set))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_normalises_and_merges() {
        let e = weighted_ecdf(&[1.0f64, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((e.eval(1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((e.eval(2.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.eval(0.5), 0.0);
        let e = weighted_ecdf(&[2.0, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!(e.eval(1.0), 0.75);
        assert_eq!(e.eval(2.0), 1.0);
        let e = weighted_ecdf(&[1.0, 1.0, 2.0], &[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.samples, vec![(1.0, 0.5), (2.0, 0.5)]);
        assert_eq!(e.n_raw, 3);
        assert!(weighted_ecdf::<f64>(&[], &[]).is_err());
        assert!(weighted_ecdf(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn heavier_samples_take_larger_jumps() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let flat = weighted_ecdf(&xs, &[1.0; 5]).unwrap();
        let tilted = weighted_ecdf(&xs, &[1.0, 1.0, 1.0, 1.0, 4.0]).unwrap();
        assert!(tilted.samples[4].1 > flat.samples[4].1);
        for x in [1.0, 2.0, 3.0, 4.0] {
            assert!(tilted.eval(x) < flat.eval(x));
        }
    }

    #[test]
    fn dkw_epsilon_values() {
        assert!((dkw_epsilon(8, 0.5f64) - 0.294_353).abs() < 1e-6);
        assert!((dkw_epsilon(1, 0.5f64) - 0.832_555).abs() < 1e-6);
        assert!((dkw_epsilon(4, 0.999_999f64) - (2f64.ln() / 8.0).sqrt()).abs() < 1e-6);
        let e = weighted_ecdf(&[1.0], &[1.0]).unwrap();
        assert!(dkw_band(&e, 1.0).is_err());
        assert!(dkw_band(&e, 0.0).is_err());
    }

    #[test]
    fn band_brackets_ecdf() {
        let e = weighted_ecdf(&[3.0, 1.0, 2.0, 5.0], &[1.0, 2.0, 1.0, 0.5]).unwrap();
        let b = dkw_band(&e, 0.5).unwrap();
        for i in 0..70 {
            let x = i as f64 / 10.0;
            assert!(b.lower(x) <= e.eval(x) && e.eval(x) <= b.upper(x));
            assert!(b.lower(x) >= 0.0 && b.upper(x) <= 1.0);
        }
    }

    #[test]
    fn single_sample_support_uses_one_percent_quantiles() {
        let e = weighted_ecdf(&[0.0f64], &[1.0]).unwrap();
        let b = dkw_band(&e, 0.5).unwrap();
        let p = fit_pbox(&e, &b).unwrap();
        let sd_u = p.upper.components[0].sd;
        let sd_l = p.lower.components[0].sd;
        let z = 2.326_347_874_040_841;
        assert!((p.support[0] + z * sd_u.max(sd_l)).abs() < 1e-12);
        assert!((p.support[1] - z * sd_u.max(sd_l)).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_give_narrow_box() {
        let e = weighted_ecdf(&[400.0f64; 6], &[1.0; 6]).unwrap();
        let b = dkw_band(&e, 0.5).unwrap();
        let p = fit_pbox(&e, &b).unwrap();
        assert!(p.support[1] - p.support[0] < 1e-2, "{:?}", p.support);
        let set = alpha_cut_intervals(&p, 3).unwrap();
        for iv in &set.intervals {
            assert!((iv[0] - 400.0).abs() < 1e-2 && (iv[1] - 400.0).abs() < 1e-2);
        }
    }

    fn ten_sample() -> (WeightedEcdf<f64>, DkwBand<f64>, PBox<f64>) {
        let xs = [12.0, 9.5, 11.2, 10.1, 13.7, 8.9, 10.8, 11.9, 9.9, 12.5];
        let ws = [1.0, 1.2, 0.8, 1.5, 1.0, 2.0, 1.1, 0.7, 1.3, 1.0];
        let e = weighted_ecdf(&xs, &ws).unwrap();
        let b = dkw_band(&e, 0.5).unwrap();
        let p = fit_pbox(&e, &b).unwrap();
        (e, b, p)
    }

    #[test]
    fn fits_follow_the_band() {
        let (e, b, p) = ten_sample();
        let spread = e.max() - e.min();
        for x in linspace(e.min() - 4.0 * spread, e.max() + 4.0 * spread, FIT_GRID_POINTS) {
            let u = p.upper.eval(x);
            let l = p.lower.eval(x);
            assert!(u >= b.lower(x) - 0.02 && u <= b.upper(x) + 0.02, "x={x} u={u} band=[{}, {}] {p:?}", b.lower(x), b.upper(x));
            assert!(l >= b.lower(x) - 0.02 && l <= b.upper(x) + 0.02, "x={x} l={l}");
        }
        let w: f64 = p.upper.components.iter().map(|c| c.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repaired_bounds_never_cross() {
        let (_, _, p) = ten_sample();
        for i in 0..1024 {
            let x = p.support[0] + (p.support[1] - p.support[0]) * i as f64 / 1023.0;
            assert!(p.upper_cdf(x) >= p.lower_cdf(x));
        }
    }

    #[test]
    fn cut_counts_and_masses() {
        let (_, _, p) = ten_sample();
        for (cuts, count) in [(1, 2), (7, 8)] {
            let s = alpha_cut_intervals(&p, cuts).unwrap();
            assert_eq!(s.intervals.len(), count);
            assert!((s.bpa_per_interval * count as f64 - 1.0).abs() < 1e-12);
            for w in s.intervals.windows(2) {
                assert!(w[0][0] <= w[1][0] && w[0][1] <= w[1][1]);
            }
            for iv in &s.intervals {
                assert!(iv[0] >= p.support[0] && iv[1] <= p.support[1] && iv[0] <= iv[1]);
            }
        }
        assert!(alpha_cut_intervals(&p, 0).is_err());
    }

    #[test]
    fn interval_envelope_brackets_pbox() {
        let (_, _, p) = ten_sample();
        let s = alpha_cut_intervals(&p, 4).unwrap();
        // The top of the support closes the last interval; truncation leaves
        // the bound short of 1 there, so the check runs on [lo, hi).
        for i in 0..400 {
            let x = p.support[0] + (p.support[1] - p.support[0]) * i as f64 / 400.0;
            let below: f64 = s.intervals.iter().filter(|iv| iv[1] <= x).count() as f64 * s.bpa_per_interval;
            let touching: f64 = s.intervals.iter().filter(|iv| iv[0] <= x).count() as f64 * s.bpa_per_interval;
            assert!(below <= p.lower_cdf(x) + 1e-6, "x={x} below={below} L={} {s:?}", p.lower_cdf(x));
            assert!(touching >= p.upper_cdf(x) - 1e-6, "x={x} touching={touching} U={} {s:?}", p.upper_cdf(x));
        }
    }

    #[test]
    fn single_precision_pipeline() {
        let (p, s) = build_intervals(&[1.0f32, 2.0, 4.0], &[1.0, 1.0, 2.0], 0.5, 2).unwrap();
        assert_eq!(s.intervals.len(), 3);
        assert!(p.support[0] < 1.0 && p.support[1] > 4.0);
    }
}
