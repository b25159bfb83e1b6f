//! Extremes of the PoC over a 5-D box of uncertain parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{poc, PocInputs};
use crate::cdm_model::{Cov2, UVector};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Correlations are kept at or below this fraction of `sqrt(σ²ξ σ²ζ)`.
pub const CORRELATION_CAP: f64 = 0.999;

/// Closed box over `[μξ, μζ, σ²ξ, σ²ζ, σξζ]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Box5<T> {
    pub lo: [T; 5],
    pub hi: [T; 5],
}

impl<T: Real> Box5<T> {
    pub fn new(lo: [T; 5], hi: [T; 5]) -> Result<Self> {
        for k in 0..5 {
            if !(lo[k].is_finite() && hi[k].is_finite()) || lo[k] > hi[k] {
                return Err(Error::Domain(format!(
                    "box component {k}: invalid interval [{}, {}]",
                    lo[k], hi[k]
                )));
            }
        }
        Ok(Box5 { lo, hi })
    }

    pub fn point(u: &UVector<T>) -> Self {
        Box5 { lo: u.0, hi: u.0 }
    }

    /// Closed-interval containment.
    pub fn contains(&self, u: &UVector<T>) -> bool {
        (0..5).all(|k| u.0[k] >= self.lo[k] && u.0[k] <= self.hi[k])
    }

    pub fn centre(&self) -> [T; 5] {
        std::array::from_fn(|k| T::lit(0.5) * (self.lo[k] + self.hi[k]))
    }

    pub fn widths(&self) -> [T; 5] {
        std::array::from_fn(|k| self.hi[k] - self.lo[k])
    }

    /// Raises non-positive variance lower bounds to `floor`. Returns `None`
    /// when a variance interval lies entirely at or below zero.
    pub fn restrict_variances(&self, floor: [T; 2]) -> Option<Self> {
        let mut b = *self;
        for (k, f) in [(2usize, floor[0]), (3, floor[1])] {
            if b.hi[k] <= T::zero() {
                return None;
            }
            if b.lo[k] <= T::zero() {
                b.lo[k] = f.min(b.hi[k]);
            }
        }
        Some(b)
    }

    fn min_abs_corr(&self) -> T {
        if self.lo[4] <= T::zero() && self.hi[4] >= T::zero() {
            T::zero()
        } else {
            self.lo[4].abs().min(self.hi[4].abs())
        }
    }

    /// Whether any point of the box is a usable covariance.
    pub fn is_psd_feasible(&self) -> bool {
        if !(self.hi[2] > T::zero() && self.hi[3] > T::zero()) {
            return false;
        }
        let cap = T::lit(CORRELATION_CAP) * (self.hi[2] * self.hi[3]).sqrt();
        self.min_abs_corr() <= cap
    }

    fn at(&self, y: &[T; 5]) -> [T; 5] {
        std::array::from_fn(|k| self.lo[k] + y[k] * (self.hi[k] - self.lo[k]))
    }

    /// Moves a point of the box into its PSD-feasible part while staying
    /// inside the box: σξζ is clamped to `±0.999 sqrt(σ²ξ σ²ζ)` where the box
    /// allows it, otherwise both variances are raised toward their upper
    /// bounds just far enough.
    pub fn project_feasible(&self, p: [T; 5]) -> [T; 5] {
        let cap = T::lit(CORRELATION_CAP);
        let limit = |a: T, b: T| cap * (a.max(T::zero()) * b.max(T::zero())).sqrt();
        let mut q = p;
        let lim = limit(q[2], q[3]);
        let c_lo = self.lo[4].max(-lim);
        let c_hi = self.hi[4].min(lim);
        if c_lo <= c_hi {
            q[4] = q[4].max(c_lo).min(c_hi);
            return q;
        }
        let need = self.min_abs_corr();
        let grow = |t: T| {
            (
                q[2] + t * (self.hi[2] - q[2]),
                q[3] + t * (self.hi[3] - q[3]),
            )
        };
        let (mut a, mut b) = (T::zero(), T::one());
        for _ in 0..60 {
            let m = T::lit(0.5) * (a + b);
            let (s1, s2) = grow(m);
            if limit(s1, s2) >= need {
                b = m;
            } else {
                a = m;
            }
        }
        let (s1, s2) = grow(b);
        q[2] = s1;
        q[3] = s2;
        let lim = limit(s1, s2);
        q[4] = q[4].max(self.lo[4].max(-lim)).min(self.hi[4].min(lim));
        q
    }
}

/// Search settings for [`poc_bounds`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    /// Quasi-random interior starts beyond the 32 vertices and the centre.
    pub interior_starts: usize,
    /// Best starts (per direction) handed to the local pattern search.
    pub refine_starts: usize,
    /// Evaluation cap of each local search.
    pub local_evals: usize,
    pub seed: u64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            interior_starts: 64,
            refine_starts: 4,
            local_evals: 120,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PocRange<T> {
    pub min: T,
    pub max: T,
}

const HALTON_BASES: [u64; 5] = [2, 3, 5, 7, 11];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

struct Evaluator<'a, T> {
    bx: &'a Box5<T>,
    hbr: T,
    tol: T,
}

impl<T: Real> Evaluator<'_, T> {
    fn point(&self, y: &[T; 5]) -> [T; 5] {
        self.bx.project_feasible(self.bx.at(y))
    }

    fn eval_at(&self, p: &[T; 5], tol: T) -> Result<T> {
        poc(
            &PocInputs::new([p[0], p[1]], Cov2::new(p[2], p[3], p[4]), self.hbr),
            tol,
        )
    }

    fn eval(&self, y: &[T; 5]) -> Result<T> {
        self.eval_at(&self.point(y), self.tol)
    }
}

/// Compass search on the unit cube; `sign` is +1 to maximise, -1 to minimise.
fn pattern_search<T: Real>(
    ev: &Evaluator<'_, T>,
    active: &[usize],
    start: [T; 5],
    start_val: T,
    sign: T,
    max_evals: usize,
) -> Result<([T; 5], T)> {
    let mut y = start;
    let mut best = start_val;
    let mut step = T::lit(0.25);
    let min_step = T::lit(1.0 / 1024.0);
    let mut evals = 0;
    while step >= min_step && evals < max_evals {
        let mut improved = false;
        'dirs: for &k in active {
            for dir in [T::one(), -T::one()] {
                let mut cand = y;
                cand[k] = (cand[k] + dir * step).max(T::zero()).min(T::one());
                if cand[k] == y[k] {
                    continue;
                }
                let v = ev.eval(&cand)?;
                evals += 1;
                if sign * (v - best) > T::zero() {
                    y = cand;
                    best = v;
                    improved = true;
                    break 'dirs;
                }
                if evals >= max_evals {
                    break 'dirs;
                }
            }
        }
        if !improved {
            step = step * T::lit(0.5);
        }
    }
    Ok((y, best))
}

/// Minimum and maximum PoC over the PSD-feasible part of `bx`.
///
/// Starts at all 32 vertices, the centre and `cfg.interior_starts` shifted
/// Halton points; the best `cfg.refine_starts` starts in each direction are
/// polished by a compass search. Screening runs at a relaxed tolerance and
/// the two extremes are re-evaluated at `rel_tol`.
pub fn poc_bounds<T: Real>(bx: &Box5<T>, hbr: T, rel_tol: T, cfg: &BoundsConfig) -> Result<PocRange<T>> {
    if !bx.is_psd_feasible() {
        return Err(Error::InfeasibleBox);
    }
    let screen_tol = rel_tol.max(T::lit(1e-4)).min(T::lit(1e-2));
    let ev = Evaluator {
        bx,
        hbr,
        tol: screen_tol,
    };
    let widths = bx.widths();
    let active: Vec<usize> = (0..5).filter(|&k| widths[k] > T::zero()).collect();
    if active.is_empty() {
        let v = ev.eval_at(&ev.point(&[T::zero(); 5]), rel_tol)?;
        return Ok(PocRange { min: v, max: v });
    }

    let mut starts: Vec<[T; 5]> = Vec::with_capacity(33 + cfg.interior_starts);
    for mask in 0u32..32 {
        // Vertices collapse along zero-width axes.
        let y: [T; 5] = std::array::from_fn(|k| {
            if mask >> k & 1 == 1 && widths[k] > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        });
        if !starts.contains(&y) {
            starts.push(y);
        }
    }
    starts.push([T::lit(0.5); 5]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shift: [f64; 5] = std::array::from_fn(|_| rng.random::<f64>());
    for i in 1..=cfg.interior_starts as u64 {
        starts.push(std::array::from_fn(|k| {
            T::lit((radical_inverse(i, HALTON_BASES[k]) + shift[k]).fract())
        }));
    }

    let mut scored: Vec<([T; 5], T)> = Vec::with_capacity(starts.len());
    for y in starts {
        let v = ev.eval(&y)?;
        scored.push((y, v));
    }
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite PoC"));

    let refine = cfg.refine_starts.max(1).min(scored.len());
    let mut lo_best = scored[0];
    for s in scored.iter().take(refine) {
        let r = pattern_search(&ev, &active, s.0, s.1, -T::one(), cfg.local_evals)?;
        if r.1 < lo_best.1 {
            lo_best = r;
        }
    }
    let mut hi_best = scored[scored.len() - 1];
    for s in scored.iter().rev().take(refine) {
        let r = pattern_search(&ev, &active, s.0, s.1, T::one(), cfg.local_evals)?;
        if r.1 > hi_best.1 {
            hi_best = r;
        }
    }
    let min = ev.eval_at(&ev.point(&lo_best.0), rel_tol)?;
    let max = ev.eval_at(&ev.point(&hi_best.0), rel_tol)?;
    Ok(PocRange {
        min: min.min(max),
        max: max.max(min),
    })
}
