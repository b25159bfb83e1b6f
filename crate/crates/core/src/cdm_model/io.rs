//! Reading and writing event files.
//!
//! Native CSV columns, in order:
//! `event_id, t2tca_days, mu_xi_m, mu_zeta_m, sig2_xi_m2, sig2_zeta_m2, sig_xizeta_m2, hbr_m[, poc]`.
//! A header row naming these columns is optional on input and always written
//! on output. Kelvins-style files are read through a [`ColumnMap`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geometry::{combine_covariances, ImpactPlaneBasis};
use super::{CdmRecord, Cov2, EventSequence, GroundTruth};
use crate::error::{Error, Result};

pub const NATIVE_CSV_HEADER: [&str; 9] = [
    "event_id",
    "t2tca_days",
    "mu_xi_m",
    "mu_zeta_m",
    "sig2_xi_m2",
    "sig2_zeta_m2",
    "sig_xizeta_m2",
    "hbr_m",
    "poc",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventFormat {
    NativeCsv,
    NativeJson,
    KelvinsCsv,
}

impl FromStr for EventFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native-csv" => Ok(EventFormat::NativeCsv),
            "native-json" => Ok(EventFormat::NativeJson),
            "kelvins-csv" => Ok(EventFormat::KelvinsCsv),
            other => Err(Error::Config(format!("unknown event format '{other}'"))),
        }
    }
}

impl std::fmt::Display for EventFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventFormat::NativeCsv => "native-csv",
            EventFormat::NativeJson => "native-json",
            EventFormat::KelvinsCsv => "kelvins-csv",
        })
    }
}

/// Canonical field names understood by the column-mapping adapter.
const MAP_COLUMN_KEYS: &[&str] = &[
    "event_id",
    "t2tca_days",
    "mu_xi_m",
    "mu_zeta_m",
    "sig2_xi_m2",
    "sig2_zeta_m2",
    "sig_xizeta_m2",
    "hbr_m",
    "poc",
    "rel_pos_r",
    "rel_pos_t",
    "rel_pos_n",
    "rel_vel_r",
    "rel_vel_t",
    "rel_vel_n",
    "primary_sigma_r",
    "primary_sigma_t",
    "primary_sigma_n",
    "primary_corr_tr",
    "primary_corr_nr",
    "primary_corr_nt",
    "secondary_sigma_r",
    "secondary_sigma_t",
    "secondary_sigma_n",
    "secondary_corr_tr",
    "secondary_corr_nr",
    "secondary_corr_nt",
    "radial_m",
];

/// Mapping from canonical field names to source column names.
///
/// Loaded from a key-value file such as
///
/// ```text
/// event_id = "event_id"
/// t2tca_days = "time_to_tca"
/// poc = "risk"
/// poc_is_log10 = true
/// hbr_m_default = 5.0
/// ```
///
/// A mapped file must provide either the impact-plane columns
/// (`mu_xi_m` … `sig_xizeta_m2`) or the full 3-D relative state with
/// per-object standard deviations and correlations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub columns: BTreeMap<String, String>,
    pub hbr_m_default: Option<f64>,
    pub poc_is_log10: bool,
}

impl ColumnMap {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> Result<Self> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("column map: {e}")))?;
        let mut map = ColumnMap::default();
        for (key, value) in table {
            match key.as_str() {
                "hbr_m_default" => {
                    let v = value
                        .as_float()
                        .or_else(|| value.as_integer().map(|i| i as f64))
                        .ok_or_else(|| Error::Config("hbr_m_default must be a number".into()))?;
                    map.hbr_m_default = Some(v);
                }
                "poc_is_log10" => {
                    map.poc_is_log10 = value
                        .as_bool()
                        .ok_or_else(|| Error::Config("poc_is_log10 must be a boolean".into()))?;
                }
                k if MAP_COLUMN_KEYS.contains(&k) => {
                    let col = value
                        .as_str()
                        .ok_or_else(|| Error::Config(format!("column map: '{k}' must be a string")))?;
                    map.columns.insert(key.clone(), col.to_string());
                }
                other => return Err(Error::Config(format!("column map: unknown key '{other}'"))),
            }
        }
        for req in ["event_id", "t2tca_days"] {
            if !map.columns.contains_key(req) {
                return Err(Error::Config(format!("column map: missing '{req}'")));
            }
        }
        if !map.columns.contains_key("hbr_m") && map.hbr_m_default.is_none() {
            return Err(Error::Config("column map: need 'hbr_m' or 'hbr_m_default'".into()));
        }
        if !map.has_impact_plane() && !map.has_state_3d() {
            return Err(Error::Config(
                "column map: need impact-plane columns or a complete 3-D relative state".into(),
            ));
        }
        Ok(map)
    }

    fn has_all(&self, keys: &[&str]) -> bool {
        keys.iter().all(|k| self.columns.contains_key(*k))
    }

    fn has_impact_plane(&self) -> bool {
        self.has_all(&NATIVE_CSV_HEADER[2..7])
    }

    fn has_state_3d(&self) -> bool {
        self.has_all(&MAP_COLUMN_KEYS[9..27])
    }
}

#[derive(Serialize, Deserialize)]
struct JsonFile {
    events: Vec<JsonEvent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonEvent {
    event_id: String,
    hbr_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<GroundTruth>,
    cdms: Vec<JsonCdm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonCdm {
    t2tca_days: f64,
    mu_xi_m: f64,
    mu_zeta_m: f64,
    sig2_xi_m2: f64,
    sig2_zeta_m2: f64,
    sig_xizeta_m2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    poc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    primary_cov_m2: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    secondary_cov_m2: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radial_m: Option<f64>,
}

/// Reads all events in a file.
pub fn parse_event_file(
    path: &Path,
    format: EventFormat,
    column_map: Option<&ColumnMap>,
) -> Result<Vec<EventSequence<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_event_str(&text, format, column_map, &path.display().to_string())
}

/// Parses events from in-memory text; `source` names the origin in diagnostics.
pub fn parse_event_str(
    text: &str,
    format: EventFormat,
    column_map: Option<&ColumnMap>,
    source: &str,
) -> Result<Vec<EventSequence<f64>>> {
    if text.trim().is_empty() {
        log::warn!("{source}: empty event file");
        return Ok(Vec::new());
    }
    match format {
        EventFormat::NativeCsv => parse_native_csv(text, source),
        EventFormat::NativeJson => parse_native_json(text, source),
        EventFormat::KelvinsCsv => {
            let map = column_map.ok_or_else(|| {
                Error::Config("kelvins-csv input requires a column map".into())
            })?;
            parse_mapped_csv(text, map, source)
        }
    }
}

struct Grouped {
    order: Vec<String>,
    rows: BTreeMap<String, Vec<CdmRecord<f64>>>,
    truth: BTreeMap<String, GroundTruth>,
}

impl Grouped {
    fn new() -> Self {
        Grouped {
            order: Vec::new(),
            rows: BTreeMap::new(),
            truth: BTreeMap::new(),
        }
    }

    fn push(&mut self, id: &str, rec: CdmRecord<f64>) {
        if !self.rows.contains_key(id) {
            self.order.push(id.to_string());
        }
        self.rows.entry(id.to_string()).or_default().push(rec);
    }

    fn finish(mut self) -> Result<Vec<EventSequence<f64>>> {
        let mut out = Vec::with_capacity(self.order.len());
        for id in self.order {
            let rows = self.rows.remove(&id).unwrap_or_default();
            let mut seq = EventSequence::new(id.clone(), rows)?;
            if let Some(t) = self.truth.remove(&id) {
                seq = seq.with_truth(t);
            }
            out.push(seq);
        }
        Ok(out)
    }
}

fn parse_f64(field: &str, name: &str, source: &str, line: u64) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: source.to_string(),
        line,
        message: format!("column {name}: cannot parse '{field}' as a number"),
    })
}

fn row_record(
    id: &str,
    line: u64,
    t2tca: f64,
    mu: [f64; 2],
    cov: Cov2<f64>,
    hbr: f64,
    poc: Option<f64>,
) -> Result<CdmRecord<f64>> {
    CdmRecord::new(t2tca, mu, cov, hbr)
        .and_then(|r| {
            let r = r.with_reported_poc(poc);
            r.validate().map(|_| r)
        })
        .map_err(|e| match e {
            Error::Validation { message, .. } => {
                Error::validation(format!("event {id}, line {line}"), message)
            }
            other => other,
        })
}

fn parse_native_csv(text: &str, source: &str) -> Result<Vec<EventSequence<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut grouped = Grouped::new();
    for (i, result) in reader.records().enumerate() {
        let record = result.map_err(|e| Error::Parse {
            path: source.to_string(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if i == 0 && record.get(0) == Some("event_id") {
            continue;
        }
        if record.len() == 1 && record.get(0).is_some_and(str::is_empty) {
            continue;
        }
        if record.len() != 8 && record.len() != 9 {
            return Err(Error::Parse {
                path: source.to_string(),
                line,
                message: format!("expected 8 or 9 columns, found {}", record.len()),
            });
        }
        let id = &record[0];
        let num = |k: usize| parse_f64(&record[k], NATIVE_CSV_HEADER[k], source, line);
        let poc = match record.get(8) {
            Some(s) if !s.is_empty() => Some(num(8)?),
            _ => None,
        };
        let rec = row_record(
            id,
            line,
            num(1)?,
            [num(2)?, num(3)?],
            Cov2::new(num(4)?, num(5)?, num(6)?),
            num(7)?,
            poc,
        )?;
        grouped.push(id, rec);
    }
    grouped.finish()
}

fn parse_native_json(text: &str, source: &str) -> Result<Vec<EventSequence<f64>>> {
    let file: JsonFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: source.to_string(),
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let mut out = Vec::with_capacity(file.events.len());
    for ev in file.events {
        let mut rows = Vec::with_capacity(ev.cdms.len());
        for (i, c) in ev.cdms.iter().enumerate() {
            let rec = CdmRecord {
                t2tca: c.t2tca_days,
                mu: [c.mu_xi_m, c.mu_zeta_m],
                cov: Cov2::new(c.sig2_xi_m2, c.sig2_zeta_m2, c.sig_xizeta_m2),
                hbr: ev.hbr_m,
                reported_poc: c.poc,
                cov_primary: c.primary_cov_m2.map(|v| Cov2::new(v[0], v[1], v[2])),
                cov_secondary: c.secondary_cov_m2.map(|v| Cov2::new(v[0], v[1], v[2])),
                radial_distance: c.radial_m,
            };
            if let (Some(p), Some(s)) = (rec.cov_primary, rec.cov_secondary) {
                let sum = combine_covariances(&p, &s);
                let tol = 1e-9 * sum.trace().abs().max(1.0);
                if (sum.xx - rec.cov.xx).abs() > tol
                    || (sum.zz - rec.cov.zz).abs() > tol
                    || (sum.xz - rec.cov.xz).abs() > tol
                {
                    log::warn!(
                        "event {}, cdm {}: combined covariance differs from primary + secondary; keeping combined",
                        ev.event_id,
                        i + 1
                    );
                }
            }
            rec.validate().map_err(|e| match e {
                Error::Validation { message, .. } => {
                    Error::validation(format!("event {}, cdm {}", ev.event_id, i + 1), message)
                }
                other => other,
            })?;
            rows.push(rec);
        }
        let mut seq = EventSequence::new(ev.event_id, rows)?;
        if let Some(t) = ev.truth {
            seq = seq.with_truth(t);
        }
        out.push(seq);
    }
    Ok(out)
}

fn correlated_cov(sig: [f64; 3], corr_tr: f64, corr_nr: f64, corr_nt: f64) -> [[f64; 3]; 3] {
    let [r, t, n] = sig;
    [
        [r * r, corr_tr * t * r, corr_nr * n * r],
        [corr_tr * t * r, t * t, corr_nt * n * t],
        [corr_nr * n * r, corr_nt * n * t, n * n],
    ]
}

fn parse_mapped_csv(text: &str, map: &ColumnMap, source: &str) -> Result<Vec<EventSequence<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: source.to_string(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (canon, col) in &map.columns {
        let idx = headers.iter().position(|h| h == col).ok_or_else(|| {
            Error::Config(format!("column map: source column '{col}' (for {canon}) not in file"))
        })?;
        index.insert(canon.as_str(), idx);
    }
    let use_plane = map.has_impact_plane();
    let mut grouped = Grouped::new();
    for result in reader.records() {
        let record = result.map_err(|e| Error::Parse {
            path: source.to_string(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |k: &str| -> Result<f64> {
            let i = index[k];
            let s = record.get(i).unwrap_or("");
            parse_f64(s, k, source, line)
        };
        let id = record.get(index["event_id"]).unwrap_or("").to_string();
        let t2tca = field("t2tca_days")?;
        let hbr = match index.get("hbr_m") {
            Some(_) => field("hbr_m")?,
            None => map.hbr_m_default.expect("validated column map"),
        };
        let poc = match index.get("poc") {
            Some(&i) if !record.get(i).unwrap_or("").is_empty() => {
                let v = field("poc")?;
                Some(if map.poc_is_log10 { 10f64.powf(v) } else { v })
            }
            _ => None,
        };
        let mut rec = if use_plane {
            row_record(
                &id,
                line,
                t2tca,
                [field("mu_xi_m")?, field("mu_zeta_m")?],
                Cov2::new(field("sig2_xi_m2")?, field("sig2_zeta_m2")?, field("sig_xizeta_m2")?),
                hbr,
                poc,
            )?
        } else {
            let pos = [field("rel_pos_r")?, field("rel_pos_t")?, field("rel_pos_n")?];
            let vel = [field("rel_vel_r")?, field("rel_vel_t")?, field("rel_vel_n")?];
            let obj = |p: &str| -> Result<[[f64; 3]; 3]> {
                Ok(correlated_cov(
                    [
                        field(&format!("{p}_sigma_r"))?,
                        field(&format!("{p}_sigma_t"))?,
                        field(&format!("{p}_sigma_n"))?,
                    ],
                    field(&format!("{p}_corr_tr"))?,
                    field(&format!("{p}_corr_nr"))?,
                    field(&format!("{p}_corr_nt"))?,
                ))
            };
            let basis = ImpactPlaneBasis::new(&pos, &vel).map_err(|e| {
                Error::validation(format!("event {id}, line {line}"), e.to_string())
            })?;
            let cp = basis.project_covariance(&obj("primary")?);
            let cs = basis.project_covariance(&obj("secondary")?);
            let mu = basis.project_vector(&pos);
            let r = row_record(&id, line, t2tca, mu, combine_covariances(&cp, &cs), hbr, poc)?;
            r.with_split_covariance(cp, cs)
        };
        if index.contains_key("radial_m") {
            rec.radial_distance = Some(field("radial_m")?.abs());
        }
        grouped.push(&id, rec);
    }
    grouped.finish()
}

/// Serialises events in a native format.
pub fn write_events_string(events: &[EventSequence<f64>], format: EventFormat) -> Result<String> {
    match format {
        EventFormat::NativeCsv => {
            let mut s = NATIVE_CSV_HEADER.join(",");
            s.push('\n');
            for ev in events {
                for c in &ev.cdms {
                    let poc = c.reported_poc.map(|p| p.to_string()).unwrap_or_default();
                    writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{}",
                        ev.event_id, c.t2tca, c.mu[0], c.mu[1], c.cov.xx, c.cov.zz, c.cov.xz, c.hbr, poc
                    )
                    .expect("write to string");
                }
            }
            Ok(s)
        }
        EventFormat::NativeJson => {
            let file = JsonFile {
                events: events
                    .iter()
                    .map(|ev| JsonEvent {
                        event_id: ev.event_id.clone(),
                        hbr_m: ev.hbr,
                        truth: ev.truth.clone(),
                        cdms: ev
                            .cdms
                            .iter()
                            .map(|c| JsonCdm {
                                t2tca_days: c.t2tca,
                                mu_xi_m: c.mu[0],
                                mu_zeta_m: c.mu[1],
                                sig2_xi_m2: c.cov.xx,
                                sig2_zeta_m2: c.cov.zz,
                                sig_xizeta_m2: c.cov.xz,
                                poc: c.reported_poc,
                                primary_cov_m2: c.cov_primary.map(|v| [v.xx, v.zz, v.xz]),
                                secondary_cov_m2: c.cov_secondary.map(|v| [v.xx, v.zz, v.xz]),
                                radial_m: c.radial_distance,
                            })
                            .collect(),
                    })
                    .collect(),
            };
            let mut s = serde_json::to_string_pretty(&file)
                .map_err(|e| Error::Internal(format!("json encode: {e}")))?;
            s.push('\n');
            Ok(s)
        }
        EventFormat::KelvinsCsv => Err(Error::Config(
            "writing kelvins-csv is not supported; use a native format".into(),
        )),
    }
}

pub fn write_event_file(path: &Path, events: &[EventSequence<f64>], format: EventFormat) -> Result<()> {
    let s = write_events_string(events, format)?;
    std::fs::write(path, s).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
