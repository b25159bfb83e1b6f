//! Report writers. All output is a pure function of its inputs, so two runs
//! with the same configuration produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::batch_harness::{BatchReport, EventAnalysis, SweepRow};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evidence_core::BelPlCurve;

pub const TIMELINE_HEADER: &str = "t2tca_days,class,pl_at_poc0,area_normalized,last_poc";
pub const CURVE_HEADER: &str = "poc_threshold,bel,pl";
pub const BATCH_HEADER: &str = "decision_time,a0,total,failed,uncertain,cam,class0,class1,class2,class3,class4,class5,\
sdo_cam,sdo_escalated,cnes_red,cnes_orange,cnes_caution";
pub const SWEEP_HEADER: &str = "decision_time,a0,tp,fp,fn,tn,uncertain,cam";

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Serialize)]
pub struct AnalyzeReport<'a> {
    pub config: &'a RunConfig,
    pub events: &'a [EventAnalysis<f64>],
}

#[derive(Serialize)]
pub struct BatchJson<'a> {
    pub config: &'a RunConfig,
    pub report: &'a BatchReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<&'a [SweepRow]>,
}

pub fn to_json<S: Serialize + ?Sized>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(format!("json encode: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// One row per prefix of the event.
pub fn timeline_csv(ev: &EventAnalysis<f64>) -> String {
    let mut s = format!("{TIMELINE_HEADER}\n");
    for p in &ev.prefixes {
        writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(p.t2tca),
            p.classification.class_id,
            fmt_f64(p.metrics.pl_at_poc0),
            fmt_f64(p.metrics.area_normalized),
            fmt_f64(p.last_poc),
        )
        .expect("write to string");
    }
    s
}

pub fn curve_csv(curve: &BelPlCurve<f64>) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for ((t, b), p) in curve.breakpoints.iter().zip(&curve.bel).zip(&curve.pl) {
        writeln!(s, "{},{},{}", fmt_f64(*t), fmt_f64(*b), fmt_f64(*p)).expect("write to string");
    }
    s
}

/// One row per (decision time, area threshold).
pub fn batch_csv(report: &BatchReport) -> String {
    let mut s = format!("{BATCH_HEADER}\n");
    for c in &report.columns {
        let mut fields = vec![fmt_f64(c.decision_time), fmt_f64(c.a0)];
        fields.extend(
            [c.total, c.failed, c.uncertain, c.cam]
                .into_iter()
                .chain(c.class_counts)
                .chain([c.sdo_cam, c.sdo_escalated, c.cnes_red, c.cnes_orange, c.cnes_caution])
                .map(|n| n.to_string()),
        );
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.decision_time),
            fmt_f64(r.a0),
            r.tp,
            r.fp,
            r.fn_,
            r.tn,
            r.uncertain,
            r.cam
        )
        .expect("write to string");
    }
    s
}

/// File-name-safe form of an event id.
pub fn file_stem(event_id: &str) -> String {
    event_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Distinct file stems for a list of event ids; later duplicates get their
/// position appended.
fn unique_stems<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    ids.enumerate()
        .map(|(i, id)| {
            let mut stem = file_stem(id);
            if !seen.insert(stem.clone()) {
                stem = format!("{stem}_{i}");
                seen.insert(stem.clone());
            }
            stem
        })
        .collect()
}

/// Writes `report.json` plus a timeline and a final-curve CSV per event.
pub fn write_analyze_outputs(dir: &Path, config: &RunConfig, events: &[EventAnalysis<f64>]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join("report.json");
    write_text(&path, &to_json(&AnalyzeReport { config, events })?)?;
    written.push(path);
    for (ev, stem) in events.iter().zip(unique_stems(events.iter().map(|e| e.event_id.as_str()))) {
        let path = dir.join(format!("{stem}_timeline.csv"));
        write_text(&path, &timeline_csv(ev))?;
        written.push(path);
        if let Some(last) = ev.prefixes.last() {
            let path = dir.join(format!("{stem}_curve.csv"));
            write_text(&path, &curve_csv(&last.curve))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes the batch table as CSV and JSON, one JSON file per event under
/// `events/`, and the sweep table when given.
pub fn write_batch_outputs(
    dir: &Path,
    config: &RunConfig,
    report: &BatchReport,
    sweep: Option<&[SweepRow]>,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: PathBuf, text: String| -> Result<()> {
        write_text(&name, &text)?;
        written.push(name);
        Ok(())
    };
    put(dir.join("batch.csv"), batch_csv(report))?;
    put(dir.join("batch.json"), to_json(&BatchJson { config, report, sweep })?)?;
    if let Some(rows) = sweep {
        put(dir.join("sweep.csv"), sweep_csv(rows))?;
    }
    let stems = unique_stems(report.events.iter().map(|e| e.event_id.as_str()));
    for (row, stem) in report.events.iter().zip(stems) {
        put(dir.join("events").join(format!("{stem}.json")), to_json(row)?)?;
    }
    Ok(written)
}
