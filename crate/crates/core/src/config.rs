//! Run configuration read from TOML, with every default taken from the
//! reference operating point.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::batch_harness::{Pipeline, SyntheticSpec};
use crate::classifier::Thresholds;
use crate::error::{Error, Result};
use crate::poc_engine::{BoundsConfig, SpocConfig, DEFAULT_REL_TOL};

/// How the plausibility threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Pl0Repr", into = "Pl0Repr")]
pub enum Pl0Policy {
    /// Smallest mass among non-empty focal elements of each analysis.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Pl0Repr {
    Word(String),
    Value(f64),
}

impl TryFrom<Pl0Repr> for Pl0Policy {
    type Error = String;

    fn try_from(r: Pl0Repr) -> std::result::Result<Self, String> {
        match r {
            Pl0Repr::Word(w) => w.parse(),
            Pl0Repr::Value(v) => Ok(Pl0Policy::Fixed(v)),
        }
    }
}

impl From<Pl0Policy> for Pl0Repr {
    fn from(p: Pl0Policy) -> Self {
        match p {
            Pl0Policy::Auto => Pl0Repr::Word("auto".into()),
            Pl0Policy::Fixed(v) => Pl0Repr::Value(v),
        }
    }
}

impl std::str::FromStr for Pl0Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Pl0Policy::Auto);
        }
        s.parse::<f64>()
            .map(Pl0Policy::Fixed)
            .map_err(|_| format!("pl0 must be \"auto\" or a number, got {s:?}"))
    }
}

impl fmt::Display for Pl0Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pl0Policy::Auto => f.write_str("auto"),
            Pl0Policy::Fixed(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub t1: f64,
    pub t2: f64,
    pub poc0: f64,
    pub poc_floor: f64,
    pub a0: f64,
    pub pl0: Pl0Policy,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        let t = Thresholds::default();
        ThresholdSection {
            t1: t.t1,
            t2: t.t2,
            poc0: t.poc0,
            poc_floor: t.poc_floor,
            a0: t.a0,
            pl0: Pl0Policy::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub n_cuts: usize,
    pub delta: f64,
    pub rel_tol: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            n_cuts: 2,
            delta: 0.5,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSection {
    pub decision_times: Vec<f64>,
    pub a0_grid: Vec<f64>,
}

impl Default for BatchSection {
    fn default() -> Self {
        BatchSection {
            decision_times: vec![3.0, 2.0, 1.0, 0.0],
            a0_grid: vec![0.1, 0.5, 0.8],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub input: Option<PathBuf>,
    pub format: Option<String>,
    pub column_map: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub thresholds: ThresholdSection,
    pub analysis: AnalysisSection,
    pub spoc: SpocConfig<f64>,
    pub bounds: BoundsConfig,
    pub batch: BatchSection,
    pub synthetic: SyntheticSpec,
    pub run: RunSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Thresholds with `pl0` set to `fallback_pl0` under the auto policy.
    pub fn thresholds(&self, fallback_pl0: f64) -> Thresholds {
        let t = &self.thresholds;
        Thresholds {
            t1: t.t1,
            t2: t.t2,
            poc0: t.poc0,
            pl0: match t.pl0 {
                Pl0Policy::Auto => fallback_pl0,
                Pl0Policy::Fixed(v) => v,
            },
            a0: t.a0,
            poc_floor: t.poc_floor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds(0.5).validate()?;
        let a = &self.analysis;
        if a.n_cuts == 0 {
            return Err(Error::Config("n_cuts must be at least 1".into()));
        }
        if !(a.delta > 0.0 && a.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0, 1)".into()));
        }
        if !(a.rel_tol > 0.0 && a.rel_tol <= 1e-2) {
            return Err(Error::Config("rel_tol must lie in (0, 1e-2]".into()));
        }
        self.spoc.validate()?;
        let d = &self.batch.decision_times;
        if d.is_empty() || d.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::Config("decision_times must be non-negative".into()));
        }
        if d.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Config("decision_times must be strictly decreasing".into()));
        }
        if self.batch.a0_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Config("a0_grid values must lie in [0, 1]".into()));
        }
        self.synthetic.validate()?;
        Ok(())
    }

    pub fn pipeline(&self) -> Pipeline {
        Pipeline {
            thresholds: self.thresholds(0.0),
            pl0: self.thresholds.pl0,
            n_cuts: self.analysis.n_cuts,
            delta: self.analysis.delta,
            rel_tol: self.analysis.rel_tol,
            spoc: self.spoc,
            bounds: BoundsConfig {
                seed: self.run.seed,
                ..self.bounds
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_operating_point() {
        let c = RunConfig::default();
        assert_eq!(c.thresholds.t1, 3.0);
        assert_eq!(c.thresholds.t2, 5.0);
        assert_eq!(c.thresholds.poc0, 1e-4);
        assert_eq!(c.thresholds.poc_floor, 1e-30);
        assert_eq!(c.thresholds.a0, 0.1);
        assert_eq!(c.analysis.n_cuts, 2);
        assert_eq!(c.analysis.delta, 0.5);
        assert_eq!(c.batch.decision_times, vec![3.0, 2.0, 1.0, 0.0]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let c = RunConfig::from_toml_str("[thresholds]\npl0 = 0.01\na0 = 0.5\n[analysis]\nn_cuts = 3\n").unwrap();
        assert_eq!(c.thresholds.pl0, Pl0Policy::Fixed(0.01));
        assert_eq!(c.analysis.n_cuts, 3);
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
        assert!(RunConfig::from_toml_str("[thresholds]\nbogus = 1\n").is_err());
        assert!(RunConfig::from_toml_str("colour = 1\n").is_err());
        let auto = RunConfig::from_toml_str("[thresholds]\npl0 = \"auto\"\n").unwrap();
        assert_eq!(auto.thresholds.pl0, Pl0Policy::Auto);
        assert!(RunConfig::from_toml_str("[thresholds]\npl0 = \"never\"\n").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = RunConfig::default();
        c.batch.decision_times = vec![0.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.thresholds.t1 = 7.0;
        assert!(c.validate().is_err());
    }
}
