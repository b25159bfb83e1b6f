//! End-to-end analysis of CDM sequences: one event prefix by prefix, whole
//! batches at fixed decision times, and synthetic labelled data to drive
//! them.

mod batch;
mod synthetic;

pub use batch::{run_batch, tune_sweep, BatchCell, BatchColumn, BatchReport, EventRow, SweepRow};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use serde::{Deserialize, Serialize};

use crate::cdm_model::EventSequence;
use crate::cdm_weighting::{sequence_weights, WeightLaw};
use crate::classifier::{
    classify, cnes_baseline, default_pl0, record_poc, sdo_baseline, BaselineDecision, Classification, Thresholds,
};
use crate::config::Pl0Policy;
use crate::error::{Error, Result};
use crate::evidence_core::{bel_pl_curve, build_focal_elements, curve_metrics, BelPlCurve, CurveMetrics};
use crate::pbox_builder::{build_intervals, IntervalSet, PBox};
use crate::poc_engine::{BoundsConfig, SpocConfig};
use crate::scalar::Real;

/// Every setting the analysis of one prefix depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    /// `pl0` here is used only under [`Pl0Policy::Fixed`].
    pub thresholds: Thresholds,
    pub pl0: Pl0Policy,
    pub n_cuts: usize,
    pub delta: f64,
    pub rel_tol: f64,
    pub spoc: SpocConfig<f64>,
    pub bounds: BoundsConfig,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline {
            thresholds: Thresholds::default(),
            pl0: Pl0Policy::Auto,
            n_cuts: 2,
            delta: 0.5,
            rel_tol: crate::poc_engine::DEFAULT_REL_TOL,
            spoc: SpocConfig::default(),
            bounds: BoundsConfig::default(),
        }
    }
}

impl Pipeline {
    /// Thresholds with `pl0` resolved for a focal-element set whose smallest
    /// live mass is `min_bpa`.
    pub fn resolved_thresholds(&self, min_bpa: f64) -> Thresholds {
        let mut th = self.thresholds;
        th.pl0 = match self.pl0 {
            Pl0Policy::Auto => min_bpa,
            Pl0Policy::Fixed(v) => v,
        };
        th
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocalSummary {
    pub total: usize,
    pub non_empty: usize,
    pub redistributed_mass: f64,
    pub min_bpa: f64,
}

/// Result of analysing the first `n_cdms` CDMs of an event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixAnalysis<T> {
    pub n_cdms: usize,
    /// Epoch of the last CDM in the prefix.
    pub t2tca: T,
    pub last_poc: T,
    pub weight_law: WeightLaw<T>,
    pub weights: Vec<T>,
    pub pboxes: Vec<PBox<T>>,
    pub intervals: Vec<IntervalSet<T>>,
    pub focal_elements: FocalSummary,
    pub curve: BelPlCurve<T>,
    pub metrics: CurveMetrics<T>,
    pub thresholds: Thresholds,
    pub classification: Classification,
    pub sdo: BaselineDecision,
    pub cnes: BaselineDecision,
}

impl<T: Real> PrefixAnalysis<T> {
    /// Class under a different area threshold, reusing the curve.
    pub fn classify_with_a0(&self, a0: f64) -> Classification {
        let th = Thresholds { a0, ..self.thresholds };
        classify(self.t2tca, &self.metrics, &th)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventAnalysis<T> {
    pub event_id: String,
    pub prefixes: Vec<PrefixAnalysis<T>>,
}

fn spoc_as<T: Real>(c: &SpocConfig<f64>) -> SpocConfig<T> {
    SpocConfig {
        kp_range: c.kp_range.map(T::lit),
        ks_range: c.ks_range.map(T::lit),
        grid_resolution: c.grid_resolution,
    }
}

/// Full pipeline on every CDM of `seq`.
pub fn analyze_prefix<T: Real>(seq: &EventSequence<T>, p: &Pipeline) -> Result<PrefixAnalysis<T>> {
    let rel_tol = T::lit(p.rel_tol);
    let (weight_law, weights) = sequence_weights(seq)?;
    let samples = seq.u_vectors();
    let mut pboxes = Vec::with_capacity(5);
    let mut intervals = Vec::with_capacity(5);
    for k in 0..5 {
        let values: Vec<T> = samples.iter().map(|u| u.0[k]).collect();
        let (pbox, set) = build_intervals(&values, &weights, T::lit(p.delta), p.n_cuts)?;
        pboxes.push(pbox);
        intervals.push(set);
    }
    let axes: [IntervalSet<T>; 5] = intervals.clone().try_into().expect("five axes");
    let mut fes = build_focal_elements(&axes, &samples)?;
    fes.compute_bounds(seq.hbr, rel_tol, &p.bounds)?;
    let floor = T::lit(p.thresholds.poc_floor);
    let curve = bel_pl_curve(&fes, floor)?;
    let metrics = curve_metrics(&curve, T::lit(p.thresholds.poc0))?;
    let min_bpa = default_pl0(&fes)?.as_f64();
    let thresholds = p.resolved_thresholds(min_bpa);
    let last = seq.last();
    let classification = classify(last.t2tca, &metrics, &thresholds);
    let sdo = sdo_baseline(seq, &thresholds, rel_tol)?;
    let cnes = cnes_baseline(last, &spoc_as(&p.spoc), rel_tol)?;
    Ok(PrefixAnalysis {
        n_cdms: seq.len(),
        t2tca: last.t2tca,
        last_poc: record_poc(last, rel_tol)?,
        weight_law,
        weights,
        pboxes,
        intervals,
        focal_elements: FocalSummary {
            total: fes.len(),
            non_empty: fes.non_empty().count(),
            redistributed_mass: fes.redistributed_mass.as_f64(),
            min_bpa,
        },
        curve,
        metrics,
        thresholds,
        classification,
        sdo,
        cnes,
    })
}

/// Analyses every prefix `1..=n` of the sequence in time order.
pub fn analyze_event<T: Real>(seq: &EventSequence<T>, p: &Pipeline) -> Result<EventAnalysis<T>> {
    let mut prefixes = Vec::with_capacity(seq.len());
    for k in 1..=seq.len() {
        let prefix = seq.prefix(k).expect("k within sequence length");
        let a = analyze_prefix(&prefix, p).map_err(|e| Error::Prefix {
            index: k,
            source: Box::new(e),
        })?;
        prefixes.push(a);
    }
    Ok(EventAnalysis {
        event_id: seq.event_id.clone(),
        prefixes,
    })
}
