//! Conjunction data messages, event sequences and impact-plane geometry.

mod geometry;
mod io;

pub use geometry::{combine_covariances, project_to_impact_plane, ImpactPlaneBasis, RelativeState3D};
pub use io::{
    parse_event_file, parse_event_str, write_event_file, write_events_string, ColumnMap,
    EventFormat,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric 2×2 covariance on the impact plane, stored as
/// `[σ²ξ, σ²ζ, σξζ]` in m².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cov2<T> {
    pub xx: T,
    pub zz: T,
    pub xz: T,
}

impl<T: Real> Cov2<T> {
    pub fn new(xx: T, zz: T, xz: T) -> Self {
        Cov2 { xx, zz, xz }
    }

    pub fn isotropic(variance: T) -> Self {
        Cov2::new(variance, variance, T::zero())
    }

    pub fn det(&self) -> T {
        self.xx * self.zz - self.xz * self.xz
    }

    pub fn trace(&self) -> T {
        self.xx + self.zz
    }

    /// Strictly positive variances and `σξζ² ≤ σ²ξ σ²ζ`.
    pub fn is_psd(&self) -> bool {
        self.xx > T::zero() && self.zz > T::zero() && self.xz * self.xz <= self.xx * self.zz
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.zz.is_finite() && self.xz.is_finite()
    }

    pub fn scaled(&self, k: T) -> Self {
        Cov2::new(self.xx * k, self.zz * k, self.xz * k)
    }

    /// Eigenvalues (descending) and the unit eigenvector of the larger one.
    pub fn eigen(&self) -> ([T; 2], [T; 2]) {
        let half = T::lit(0.5);
        let mean = half * (self.xx + self.zz);
        let diff = half * (self.xx - self.zz);
        let rad = (diff * diff + self.xz * self.xz).sqrt();
        let l1 = mean + rad;
        let l2 = mean - rad;
        let angle = half * (T::lit(2.0) * self.xz).atan2(self.xx - self.zz);
        ([l1, l2], [angle.cos(), angle.sin()])
    }

    /// Covariance expressed in a frame rotated by `angle` radians.
    pub fn rotated(&self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let xx = c * c * self.xx + T::lit(2.0) * c * s * self.xz + s * s * self.zz;
        let zz = s * s * self.xx - T::lit(2.0) * c * s * self.xz + c * c * self.zz;
        let xz = (self.zz - self.xx) * c * s + (c * c - s * s) * self.xz;
        Cov2::new(xx, zz, xz)
    }
}

/// One conjunction data message reduced to impact-plane quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdmRecord<T> {
    /// Days to time of closest approach.
    pub t2tca: T,
    /// Miss-distance vector `[μξ, μζ]` in metres.
    pub mu: [T; 2],
    /// Combined covariance in m².
    pub cov: Cov2<T>,
    /// Hard-body radius in metres.
    pub hbr: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported_poc: Option<T>,
    /// Primary-object covariance when the source keeps the two objects apart.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov_primary: Option<Cov2<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov_secondary: Option<Cov2<T>>,
    /// Radial separation at TCA in metres, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radial_distance: Option<T>,
}

impl<T: Real> CdmRecord<T> {
    pub fn new(t2tca: T, mu: [T; 2], cov: Cov2<T>, hbr: T) -> Result<Self> {
        let rec = CdmRecord {
            t2tca,
            mu,
            cov,
            hbr,
            reported_poc: None,
            cov_primary: None,
            cov_secondary: None,
            radial_distance: None,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn with_reported_poc(mut self, poc: Option<T>) -> Self {
        self.reported_poc = poc;
        self
    }

    /// Attaches per-object covariances; their sum replaces the combined one.
    pub fn with_split_covariance(mut self, primary: Cov2<T>, secondary: Cov2<T>) -> Self {
        self.cov = combine_covariances(&primary, &secondary);
        self.cov_primary = Some(primary);
        self.cov_secondary = Some(secondary);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = "CDM record";
        let finite = self.t2tca.is_finite()
            && self.mu[0].is_finite()
            && self.mu[1].is_finite()
            && self.cov.is_finite()
            && self.hbr.is_finite();
        if !finite {
            return Err(Error::validation(ctx, "non-finite field"));
        }
        if self.t2tca < T::zero() {
            return Err(Error::validation(ctx, format!("negative t2tca {}", self.t2tca)));
        }
        if self.hbr <= T::zero() {
            return Err(Error::validation(ctx, format!("non-positive hbr {}", self.hbr)));
        }
        if !(self.cov.xx > T::zero() && self.cov.zz > T::zero()) {
            return Err(Error::validation(ctx, "variances must be positive"));
        }
        if !self.cov.is_psd() {
            return Err(Error::validation(
                ctx,
                format!(
                    "covariance not positive semi-definite: sig_xizeta^2 = {} > {} = sig2_xi * sig2_zeta",
                    self.cov.xz * self.cov.xz,
                    self.cov.xx * self.cov.zz
                ),
            ));
        }
        if let Some(p) = self.reported_poc {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::validation(ctx, format!("reported PoC {} outside [0, 1]", p)));
            }
        }
        for c in [self.cov_primary, self.cov_secondary].iter().flatten() {
            if !c.is_finite() || c.xx < T::zero() || c.zz < T::zero() || c.xz * c.xz > c.xx * c.zz {
                return Err(Error::validation(ctx, "per-object covariance not PSD"));
            }
        }
        Ok(())
    }

    pub fn u_vector(&self) -> UVector<T> {
        UVector([self.mu[0], self.mu[1], self.cov.xx, self.cov.zz, self.cov.xz])
    }

    pub fn miss_distance(&self) -> T {
        self.mu[0].hypot(self.mu[1])
    }
}

/// The uncertain parameter vector `[μξ, μζ, σ²ξ, σ²ζ, σξζ]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UVector<T>(pub [T; 5]);

impl<T: Real> UVector<T> {
    pub const NAMES: [&'static str; 5] = ["mu_xi", "mu_zeta", "sig2_xi", "sig2_zeta", "sig_xizeta"];

    pub fn mu(&self) -> [T; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn cov(&self) -> Cov2<T> {
        Cov2::new(self.0[2], self.0[3], self.0[4])
    }

    pub fn is_feasible(&self) -> bool {
        self.cov().is_psd()
    }
}

/// Ground-truth annotation carried by synthetic events.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub true_poc: f64,
    pub positive: bool,
}

/// Time-ordered CDMs of a single conjunction event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSequence<T> {
    pub event_id: String,
    /// Sorted by strictly decreasing t2tca.
    pub cdms: Vec<CdmRecord<T>>,
    pub hbr: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<GroundTruth>,
}

impl<T: Real> EventSequence<T> {
    /// Builds a sequence from CDMs in reading order.
    ///
    /// Records are sorted by decreasing t2tca; on duplicate epochs the record
    /// read last wins and a warning is logged.
    pub fn new(event_id: impl Into<String>, cdms: Vec<CdmRecord<T>>) -> Result<Self> {
        let event_id = event_id.into();
        if cdms.is_empty() {
            return Err(Error::validation(format!("event {event_id}"), "no CDMs"));
        }
        for (i, c) in cdms.iter().enumerate() {
            c.validate().map_err(|e| match e {
                Error::Validation { message, .. } => {
                    Error::validation(format!("event {event_id}, record {}", i + 1), message)
                }
                other => other,
            })?;
        }
        let hbr = cdms[0].hbr;
        if let Some(c) = cdms.iter().find(|c| c.hbr != hbr) {
            return Err(Error::validation(
                format!("event {event_id}"),
                format!("hard-body radius differs between CDMs ({} vs {})", hbr, c.hbr),
            ));
        }
        // Stable sort keeps reading order among equal epochs.
        let mut indexed: Vec<(usize, CdmRecord<T>)> = cdms.into_iter().enumerate().collect();
        indexed.sort_by(|a, b| {
            b.1.t2tca
                .partial_cmp(&a.1.t2tca)
                .expect("validated finite")
                .then(a.0.cmp(&b.0))
        });
        let mut out: Vec<CdmRecord<T>> = Vec::with_capacity(indexed.len());
        for (_, rec) in indexed {
            match out.last_mut() {
                Some(prev) if prev.t2tca == rec.t2tca => {
                    log::warn!(
                        "event {event_id}: duplicate t2tca {} days, keeping the last record read",
                        rec.t2tca
                    );
                    *prev = rec;
                }
                _ => out.push(rec),
            }
        }
        Ok(EventSequence {
            event_id,
            cdms: out,
            hbr,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: GroundTruth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn len(&self) -> usize {
        self.cdms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdms.is_empty()
    }

    pub fn last(&self) -> &CdmRecord<T> {
        self.cdms.last().expect("sequence is non-empty")
    }

    /// The first `k` CDMs (earliest epochs).
    pub fn prefix(&self, k: usize) -> Option<EventSequence<T>> {
        if k == 0 || k > self.cdms.len() {
            return None;
        }
        Some(EventSequence {
            event_id: self.event_id.clone(),
            cdms: self.cdms[..k].to_vec(),
            hbr: self.hbr,
            truth: self.truth.clone(),
        })
    }

    /// CDMs received no later than `decision_time` days before TCA.
    pub fn available_at(&self, decision_time: T) -> Option<EventSequence<T>> {
        let k = self.cdms.iter().take_while(|c| c.t2tca >= decision_time).count();
        self.prefix(k)
    }

    pub fn u_vectors(&self) -> Vec<UVector<T>> {
        self.cdms.iter().map(CdmRecord::u_vector).collect()
    }
}
