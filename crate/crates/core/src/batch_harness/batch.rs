//! Batch classification at fixed decision times and area-threshold tiers.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{analyze_prefix, Pipeline};
use crate::cdm_model::EventSequence;
use crate::classifier::BaselineLevel;
use crate::error::{Error, Result};

/// Outcome for one event at one decision time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BatchCell {
    /// No CDM had been received by the decision time.
    Unavailable,
    Failed {
        n_cdms: usize,
        error: String,
    },
    Analysed {
        n_cdms: usize,
        t2tca: f64,
        last_poc: f64,
        pl_at_poc0: f64,
        area_normalized: f64,
        pl0: f64,
        /// Class per entry of the area-threshold grid.
        classes: Vec<u8>,
        sdo: BaselineLevel,
        cnes: BaselineLevel,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub event_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive: Option<bool>,
    /// One cell per decision time.
    pub cells: Vec<BatchCell>,
}

/// Counts for one decision time and one area threshold.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchColumn {
    pub decision_time: f64,
    pub a0: f64,
    /// Events analysed successfully.
    pub total: usize,
    pub failed: usize,
    /// Classes 0 and 3.
    pub uncertain: usize,
    /// Class 1.
    pub cam: usize,
    pub class_counts: [usize; 6],
    pub sdo_cam: usize,
    pub sdo_escalated: usize,
    pub cnes_red: usize,
    pub cnes_orange: usize,
    pub cnes_caution: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub decision_times: Vec<f64>,
    pub a0_grid: Vec<f64>,
    pub columns: Vec<BatchColumn>,
    pub events: Vec<EventRow>,
}

impl BatchReport {
    pub fn column(&self, decision_time: f64, a0: f64) -> Option<&BatchColumn> {
        self.columns
            .iter()
            .find(|c| c.decision_time == decision_time && c.a0 == a0)
    }
}

fn check_grid(decision_times: &[f64], a0_grid: &[f64]) -> Result<()> {
    if decision_times.is_empty() || decision_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::Config("decision times must be non-negative and finite".into()));
    }
    if decision_times.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Config("decision times must be strictly decreasing".into()));
    }
    if a0_grid.is_empty() || a0_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Config("area thresholds must lie in [0, 1]".into()));
    }
    Ok(())
}

fn event_row(seq: &EventSequence<f64>, p: &Pipeline, decision_times: &[f64], a0_grid: &[f64]) -> EventRow {
    // Decision times that see the same CDMs share one analysis.
    let mut cache: BTreeMap<usize, BatchCell> = BTreeMap::new();
    let cells = decision_times
        .iter()
        .map(|&td| {
            let Some(prefix) = seq.available_at(td) else {
                return BatchCell::Unavailable;
            };
            cache
                .entry(prefix.len())
                .or_insert_with(|| match analyze_prefix(&prefix, p) {
                    Ok(a) => BatchCell::Analysed {
                        n_cdms: a.n_cdms,
                        t2tca: a.t2tca,
                        last_poc: a.last_poc,
                        pl_at_poc0: a.metrics.pl_at_poc0,
                        area_normalized: a.metrics.area_normalized,
                        pl0: a.thresholds.pl0,
                        classes: a0_grid.iter().map(|&a0| a.classify_with_a0(a0).class_id).collect(),
                        sdo: a.sdo.level,
                        cnes: a.cnes.level,
                    },
                    Err(e) => {
                        log::warn!("event {}: {} CDMs: {e}", seq.event_id, prefix.len());
                        BatchCell::Failed {
                            n_cdms: prefix.len(),
                            error: e.to_string(),
                        }
                    }
                })
                .clone()
        })
        .collect();
    EventRow {
        event_id: seq.event_id.clone(),
        positive: seq.truth.as_ref().map(|t| t.positive),
        cells,
    }
}

/// Classifies every event at each decision time using only the CDMs
/// received by then. Failures are counted per cell and never abort the run.
pub fn run_batch(
    events: &[EventSequence<f64>],
    p: &Pipeline,
    decision_times: &[f64],
    a0_grid: &[f64],
) -> Result<BatchReport> {
    check_grid(decision_times, a0_grid)?;
    let rows: Vec<EventRow> = events
        .par_iter()
        .map(|seq| event_row(seq, p, decision_times, a0_grid))
        .collect();

    let mut columns = Vec::with_capacity(decision_times.len() * a0_grid.len());
    for (ti, &td) in decision_times.iter().enumerate() {
        for (ai, &a0) in a0_grid.iter().enumerate() {
            let mut col = BatchColumn {
                decision_time: td,
                a0,
                ..BatchColumn::default()
            };
            for row in &rows {
                match &row.cells[ti] {
                    BatchCell::Unavailable => {}
                    BatchCell::Failed { .. } => col.failed += 1,
                    BatchCell::Analysed { classes, sdo, cnes, .. } => {
                        let class = classes[ai];
                        col.total += 1;
                        col.class_counts[class as usize] += 1;
                        col.uncertain += usize::from(matches!(class, 0 | 3));
                        col.cam += usize::from(class == 1);
                        col.sdo_cam += usize::from(*sdo == BaselineLevel::Cam);
                        col.sdo_escalated += usize::from(*sdo == BaselineLevel::Escalated);
                        col.cnes_red += usize::from(*cnes == BaselineLevel::Red);
                        col.cnes_orange += usize::from(*cnes == BaselineLevel::Orange);
                        col.cnes_caution += usize::from(*cnes == BaselineLevel::Caution);
                    }
                }
            }
            columns.push(col);
        }
    }
    Ok(BatchReport {
        decision_times: decision_times.to_vec(),
        a0_grid: a0_grid.to_vec(),
        columns,
        events: rows,
    })
}

/// Confusion counts of the manoeuvre recommendation against ground truth.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub decision_time: f64,
    pub a0: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub uncertain: usize,
    pub cam: usize,
}

/// Scores class 1 as the manoeuvre recommendation for every
/// (decision time, area threshold) pair. Events must carry labels.
pub fn tune_sweep(
    events: &[EventSequence<f64>],
    p: &Pipeline,
    decision_times: &[f64],
    a0_grid: &[f64],
) -> Result<(BatchReport, Vec<SweepRow>)> {
    if let Some(e) = events.iter().find(|e| e.truth.is_none()) {
        return Err(Error::validation(
            format!("event {}", e.event_id),
            "tuning sweep needs ground-truth labels",
        ));
    }
    let report = run_batch(events, p, decision_times, a0_grid)?;
    let mut rows = Vec::new();
    for (ti, &td) in decision_times.iter().enumerate() {
        for (ai, &a0) in a0_grid.iter().enumerate() {
            let mut r = SweepRow {
                decision_time: td,
                a0,
                ..SweepRow::default()
            };
            for ev in &report.events {
                if let BatchCell::Analysed { classes, .. } = &ev.cells[ti] {
                    let cam = classes[ai] == 1;
                    let positive = ev.positive.expect("labels checked above");
                    r.uncertain += usize::from(matches!(classes[ai], 0 | 3));
                    r.cam += usize::from(cam);
                    match (cam, positive) {
                        (true, true) => r.tp += 1,
                        (true, false) => r.fp += 1,
                        (false, true) => r.fn_ += 1,
                        (false, false) => r.tn += 1,
                    }
                }
            }
            rows.push(r);
        }
    }
    Ok((report, rows))
}
