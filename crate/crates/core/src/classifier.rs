//! Six-class evidence-based decision rule and the two PoC-threshold
//! baselines it is compared against.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cdm_model::{CdmRecord, EventSequence};
use crate::error::{Error, Result};
use crate::evidence_core::{CurveMetrics, FocalElementSet};
use crate::poc_engine::{poc, spoc, spoc_combined, PocInputs, SpocConfig};
use crate::scalar::Real;

/// CNES level boundaries on sPoC.
pub const CNES_RED: f64 = 5e-4;
pub const CNES_ORANGE: f64 = 1e-4;
/// CNES caution geometry (m).
pub const CNES_MISS_LIMIT: f64 = 1000.0;
pub const CNES_RADIAL_LIMIT: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Days.
    pub t1: f64,
    /// Days.
    pub t2: f64,
    pub poc0: f64,
    pub pl0: f64,
    pub a0: f64,
    pub poc_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            t1: 3.0,
            t2: 5.0,
            poc0: 1e-4,
            pl0: 1.0 / 243.0,
            a0: 0.1,
            poc_floor: 1e-30,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.t1 > 0.0 && self.t1 < self.t2 && self.t2.is_finite()) {
            return bad("thresholds require 0 < t1 < t2");
        }
        if !(self.poc0 > 0.0 && self.poc0 < 1.0) {
            return bad("poc0 must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.pl0) {
            return bad("pl0 must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.a0) {
            return bad("a0 must lie in [0, 1]");
        }
        if !(self.poc_floor > 0.0 && self.poc_floor <= self.poc0) {
            return bad("poc_floor must lie in (0, poc0]");
        }
        Ok(())
    }
}

/// Which branch of the decision table produced a class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RulePath {
    BeyondT2,
    MiddleLowPl,
    MiddleSmallArea,
    MiddleLargeArea,
    NearLowPl,
    NearSmallArea,
    NearLargeArea,
}

impl RulePath {
    pub fn class_id(self) -> u8 {
        match self {
            RulePath::NearLargeArea => 0,
            RulePath::NearSmallArea => 1,
            RulePath::MiddleSmallArea => 2,
            RulePath::BeyondT2 | RulePath::MiddleLargeArea => 3,
            RulePath::MiddleLowPl => 4,
            RulePath::NearLowPl => 5,
        }
    }
}

impl fmt::Display for RulePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RulePath::BeyondT2 => "t2tca > T2",
            RulePath::MiddleLowPl => "T1 < t2tca <= T2, Pl < Pl0",
            RulePath::MiddleSmallArea => "T1 < t2tca <= T2, Pl >= Pl0, A < A0",
            RulePath::MiddleLargeArea => "T1 < t2tca <= T2, Pl >= Pl0, A >= A0",
            RulePath::NearLowPl => "t2tca <= T1, Pl < Pl0",
            RulePath::NearSmallArea => "t2tca <= T1, Pl >= Pl0, A < A0",
            RulePath::NearLargeArea => "t2tca <= T1, Pl >= Pl0, A >= A0",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class_id: u8,
    pub t2tca: f64,
    pub pl_at_poc0: f64,
    pub area_normalized: f64,
    pub rule_path: RulePath,
}

impl Classification {
    /// True for classes that recommend a manoeuvre-level response.
    pub fn is_cam(&self) -> bool {
        self.class_id == 1
    }

    /// True for classes 0 and 3.
    pub fn is_uncertain(&self) -> bool {
        matches!(self.class_id, 0 | 3)
    }
}

fn rule(t2tca: f64, pl: f64, area: f64, th: &Thresholds) -> RulePath {
    if t2tca > th.t2 {
        RulePath::BeyondT2
    } else if t2tca > th.t1 {
        if pl < th.pl0 {
            RulePath::MiddleLowPl
        } else if area < th.a0 {
            RulePath::MiddleSmallArea
        } else {
            RulePath::MiddleLargeArea
        }
    } else if pl < th.pl0 {
        RulePath::NearLowPl
    } else if area < th.a0 {
        RulePath::NearSmallArea
    } else {
        RulePath::NearLargeArea
    }
}

pub fn classify<T: Real>(t2tca: T, metrics: &CurveMetrics<T>, th: &Thresholds) -> Classification {
    let (t, pl, area) = (
        t2tca.as_f64(),
        metrics.pl_at_poc0.as_f64(),
        metrics.area_normalized.as_f64(),
    );
    let path = rule(t, pl, area, th);
    Classification {
        class_id: path.class_id(),
        t2tca: t,
        pl_at_poc0: pl,
        area_normalized: area,
        rule_path: path,
    }
}

/// Re-derives the class from the stored inputs.
pub fn reclassify(c: &Classification, th: &Thresholds) -> u8 {
    rule(c.t2tca, c.pl_at_poc0, c.area_normalized, th).class_id()
}

/// Smallest mass among non-empty focal elements.
pub fn default_pl0<T: Real>(fes: &FocalElementSet<T>) -> Result<T> {
    fes.non_empty()
        .map(|e| e.bpa)
        .reduce(|a, b| a.min(b))
        .ok_or_else(|| Error::Consistency("no non-empty focal element".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Sdo,
    Cnes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineLevel {
    Cam,
    Escalated,
    Red,
    Orange,
    Caution,
    None,
}

impl fmt::Display for BaselineLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BaselineLevel::Cam => "CAM",
            BaselineLevel::Escalated => "escalated",
            BaselineLevel::Red => "red",
            BaselineLevel::Orange => "orange",
            BaselineLevel::Caution => "caution",
            BaselineLevel::None => "none",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineDecision {
    pub scheme: Scheme,
    pub level: BaselineLevel,
    pub triggering_value: f64,
    /// Set when sPoC had to scale the combined covariance.
    pub combined_fallback: bool,
}

/// PoC of a record: the reported value when present, otherwise computed.
pub fn record_poc<T: Real>(rec: &CdmRecord<T>, rel_tol: T) -> Result<T> {
    match rec.reported_poc {
        Some(p) => Ok(p),
        None => poc(&PocInputs::from_record(rec), rel_tol),
    }
}

/// Last-CDM PoC against `poc0`, manoeuvre only inside `T1`.
pub fn sdo_baseline<T: Real>(prefix: &EventSequence<T>, th: &Thresholds, rel_tol: T) -> Result<BaselineDecision> {
    let last = prefix.last();
    let p = record_poc(last, rel_tol)?.as_f64();
    let level = if p >= th.poc0 {
        if last.t2tca.as_f64() <= th.t1 {
            BaselineLevel::Cam
        } else {
            BaselineLevel::Escalated
        }
    } else {
        BaselineLevel::None
    };
    Ok(BaselineDecision {
        scheme: Scheme::Sdo,
        level,
        triggering_value: p,
        combined_fallback: false,
    })
}

/// Level assigned to an sPoC value and encounter geometry.
pub fn cnes_level(spoc_value: f64, miss_distance: f64, radial_distance: Option<f64>) -> BaselineLevel {
    if spoc_value > CNES_RED {
        BaselineLevel::Red
    } else if spoc_value > CNES_ORANGE {
        BaselineLevel::Orange
    } else if miss_distance < CNES_MISS_LIMIT || radial_distance.is_some_and(|r| r.abs() < CNES_RADIAL_LIMIT) {
        BaselineLevel::Caution
    } else {
        BaselineLevel::None
    }
}

/// sPoC of the last record mapped onto the CNES levels.
pub fn cnes_baseline<T: Real>(last: &CdmRecord<T>, cfg: &SpocConfig<T>, rel_tol: T) -> Result<BaselineDecision> {
    let (r, fallback) = match (last.cov_primary, last.cov_secondary) {
        (Some(p), Some(s)) => (spoc(&p, &s, last.mu, last.hbr, cfg, rel_tol)?, false),
        _ => (spoc_combined(&last.cov, last.mu, last.hbr, cfg, rel_tol)?, true),
    };
    let value = r.spoc.as_f64();
    let radial = last.radial_distance.map(|r| r.as_f64());
    Ok(BaselineDecision {
        scheme: Scheme::Cnes,
        level: cnes_level(value, last.miss_distance().as_f64(), radial),
        triggering_value: value,
        combined_fallback: fallback,
    })
}
