//! Focal elements over the five uncertain parameters and the Belief and
//! Plausibility of `PoC ≥ t` as step functions of the threshold `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdm_model::UVector;
use crate::error::{Error, Result};
use crate::pbox_builder::IntervalSet;
use crate::poc_engine::{poc_bounds, BoundsConfig, Box5, PocRange};
use crate::scalar::{exact_sum, ExactAccumulator, Real};

/// Variance lower bounds at or below zero are lifted to this fraction of the
/// largest sampled variance of the same axis.
pub const VARIANCE_FLOOR_FRACTION: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocalElement<T> {
    pub bx: Box5<T>,
    pub bpa: T,
    /// Interval index on each axis.
    pub index: [usize; 5],
    pub empty: bool,
    pub bounds: Option<PocRange<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocalElementSet<T> {
    pub elements: Vec<FocalElement<T>>,
    /// Mass taken from empty elements and shared among the others.
    pub redistributed_mass: T,
}

impl<T: Real> FocalElementSet<T> {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn non_empty(&self) -> impl Iterator<Item = &FocalElement<T>> {
        self.elements.iter().filter(|e| !e.empty)
    }

    pub fn total_bpa(&self) -> T {
        exact_sum(self.elements.iter().map(|e| e.bpa))
    }

    /// Fills the PoC range of every non-empty element.
    pub fn compute_bounds(&mut self, hbr: T, rel_tol: T, cfg: &BoundsConfig) -> Result<()> {
        self.elements
            .par_iter_mut()
            .filter(|e| !e.empty)
            .try_for_each(|e| {
                e.bounds = Some(poc_bounds(&e.bx, hbr, rel_tol, cfg)?);
                Ok(())
            })
    }
}

/// Cartesian product of the per-axis intervals with product masses.
///
/// An element is empty when no sample lies in its closed box or when the box
/// holds no usable covariance. Empty elements keep mass 0 and their original
/// mass is shared equally by the remaining elements.
pub fn build_focal_elements<T: Real>(
    intervals: &[IntervalSet<T>; 5],
    samples: &[UVector<T>],
) -> Result<FocalElementSet<T>> {
    if samples.is_empty() {
        return Err(Error::Domain("focal elements need at least one sample".into()));
    }
    if let Some(k) = (0..5).find(|&k| intervals[k].intervals.is_empty()) {
        return Err(Error::Domain(format!("axis {k} has no intervals")));
    }
    let floor: [T; 2] = [2usize, 3].map(|k| {
        let m = samples.iter().fold(T::zero(), |m, u| m.max(u.0[k]));
        T::lit(VARIANCE_FLOOR_FRACTION) * m
    });
    let counts: [usize; 5] = std::array::from_fn(|k| intervals[k].intervals.len());
    let total: usize = counts.iter().product();
    let mut elements = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let mut index = [0usize; 5];
        for k in (0..5).rev() {
            index[k] = rest % counts[k];
            rest /= counts[k];
        }
        let lo: [T; 5] = std::array::from_fn(|k| intervals[k].intervals[index[k]][0]);
        let hi: [T; 5] = std::array::from_fn(|k| intervals[k].intervals[index[k]][1]);
        let raw = Box5::new(lo, hi)?;
        let bpa = (0..5).fold(T::one(), |p, k| p * intervals[k].bpa_per_interval);
        let occupied = samples.iter().any(|u| raw.contains(u));
        let usable = raw.restrict_variances(floor).filter(|b| b.is_psd_feasible());
        let (bx, empty) = match usable {
            Some(b) if occupied => (b, false),
            Some(b) => (b, true),
            None => (raw, true),
        };
        elements.push(FocalElement {
            bx,
            bpa,
            index,
            empty,
            bounds: None,
        });
    }
    let kept = elements.iter().filter(|e| !e.empty).count();
    if kept == 0 {
        return Err(Error::Consistency("every focal element is empty".into()));
    }
    let lost = exact_sum(elements.iter().filter(|e| e.empty).map(|e| e.bpa));
    let share = lost / T::from_usize(kept).unwrap();
    for e in &mut elements {
        if e.empty {
            e.bpa = T::zero();
        } else {
            e.bpa = e.bpa + share;
        }
    }
    Ok(FocalElementSet {
        elements,
        redistributed_mass: lost,
    })
}

/// Belief and Plausibility of `PoC ≥ t` as step functions.
///
/// `bel[i]` and `pl[i]` hold the values at `breakpoints[i]`, which are also
/// the values on `(breakpoints[i-1], breakpoints[i]]`. Above the last
/// breakpoint both are 0; at or below `poc_floor` they equal the first entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BelPlCurve<T> {
    pub breakpoints: Vec<T>,
    pub bel: Vec<T>,
    pub pl: Vec<T>,
    pub poc_floor: T,
}

impl<T: Real> BelPlCurve<T> {
    fn slot(&self, t: T) -> Option<usize> {
        let i = self.breakpoints.partition_point(|&b| b < t);
        (i < self.breakpoints.len()).then_some(i)
    }

    pub fn bel_at(&self, t: T) -> T {
        self.slot(t).map_or(T::zero(), |i| self.bel[i])
    }

    pub fn pl_at(&self, t: T) -> T {
        self.slot(t).map_or(T::zero(), |i| self.pl[i])
    }
}

/// Step curves from the cached PoC ranges; ranges are clipped to
/// `[poc_floor, 1]` here only.
pub fn bel_pl_curve<T: Real>(fes: &FocalElementSet<T>, poc_floor: T) -> Result<BelPlCurve<T>> {
    if !(poc_floor > T::zero() && poc_floor < T::one()) {
        return Err(Error::Domain(format!("poc_floor {poc_floor} outside (0, 1)")));
    }
    let clip = |p: T| p.max(poc_floor).min(T::one());
    let mut lows: Vec<(T, T)> = Vec::new();
    let mut highs: Vec<(T, T)> = Vec::new();
    for e in fes.non_empty() {
        let b = e
            .bounds
            .ok_or_else(|| Error::Internal("focal element without PoC bounds".into()))?;
        lows.push((clip(b.min), e.bpa));
        highs.push((clip(b.max), e.bpa));
    }
    let mut breakpoints: Vec<T> = lows.iter().chain(&highs).map(|p| p.0).collect();
    breakpoints.push(poc_floor);
    breakpoints.sort_by(|a, b| a.partial_cmp(b).expect("finite PoC"));
    breakpoints.dedup();

    // Sweep thresholds from the top, adding elements whose clipped bound
    // reaches the current threshold.
    let sweep = |mut pts: Vec<(T, T)>| -> Vec<T> {
        pts.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite PoC"));
        let mut acc = ExactAccumulator::new();
        let mut j = 0;
        let mut out = vec![T::zero(); breakpoints.len()];
        for i in (0..breakpoints.len()).rev() {
            while j < pts.len() && pts[j].0 >= breakpoints[i] {
                acc.add(pts[j].1);
                j += 1;
            }
            out[i] = acc.value();
        }
        out
    };
    let bel = sweep(lows);
    let pl = sweep(highs);
    Ok(BelPlCurve {
        breakpoints,
        bel,
        pl,
        poc_floor,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMetrics<T> {
    /// Area between Pl and Bel over `log10(PoC)` from the floor to 0.
    pub area: T,
    pub area_normalized: T,
    pub pl_at_poc0: T,
    pub bel_at_poc0: T,
}

pub fn curve_metrics<T: Real>(curve: &BelPlCurve<T>, poc0: T) -> Result<CurveMetrics<T>> {
    if !(poc0 >= curve.poc_floor && poc0 <= T::one()) {
        return Err(Error::Domain(format!(
            "poc0 {poc0} outside [{}, 1]",
            curve.poc_floor
        )));
    }
    let b = &curve.breakpoints;
    let area = exact_sum((1..b.len()).map(|i| (curve.pl[i] - curve.bel[i]) * (b[i].log10() - b[i - 1].log10())));
    let max_area = -curve.poc_floor.log10();
    Ok(CurveMetrics {
        area,
        area_normalized: (area / max_area).max(T::zero()).min(T::one()),
        pl_at_poc0: curve.pl_at(poc0),
        bel_at_poc0: curve.bel_at(poc0),
    })
}
