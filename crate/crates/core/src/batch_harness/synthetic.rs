//! Seeded synthetic CDM sequences with a known configuration at TCA.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cdm_model::{CdmRecord, Cov2, EventSequence, GroundTruth};
use crate::error::{Error, Result};
use crate::poc_engine::{poc, PocInputs};

/// Generator settings. Perturbation sizes are relative to the current
/// standard deviations, so zero noise, zero growth and zero injector rates
/// give every CDM of an event the same content.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_events: usize,
    /// Inclusive range of CDMs per event.
    pub cdms_per_event: [usize; 2],
    /// Range of the first CDM epoch (days before TCA).
    pub first_t2tca: [f64; 2],
    /// Range of the last CDM epoch (days before TCA).
    pub last_t2tca: [f64; 2],
    pub hbr_m: f64,
    /// Log-uniform range of the true miss distance (m).
    pub miss_m: [f64; 2],
    /// Uniform range of the true standard deviation along ξ (m).
    pub sigma_xi_m: [f64; 2],
    /// Ratio σζ / σξ.
    pub aspect: [f64; 2],
    pub max_correlation: f64,
    /// Fractional growth of the standard deviations per day before TCA.
    pub cov_growth: f64,
    /// Mean scatter in units of the current standard deviations.
    pub mean_noise: f64,
    /// Log-normal scatter of the standard deviations.
    pub cov_noise: f64,
    /// Probability that an event contains a 90° covariance rotation.
    pub rotation_rate: f64,
    /// Probability that an event's mean drifts across the sequence.
    pub drift_rate: f64,
    /// Size of the drift at the first CDM, in true standard deviations.
    pub drift_sigmas: f64,
    /// Share of the combined covariance attributed to the primary object.
    pub primary_share: f64,
    pub poc0: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_events: 50,
            cdms_per_event: [3, 6],
            first_t2tca: [0.5, 7.0],
            last_t2tca: [0.0, 1.0],
            hbr_m: 10.0,
            miss_m: [5.0, 3000.0],
            sigma_xi_m: [20.0, 300.0],
            aspect: [0.2, 1.0],
            max_correlation: 0.5,
            cov_growth: 0.15,
            mean_noise: 0.3,
            cov_noise: 0.1,
            rotation_rate: 0.1,
            drift_rate: 0.1,
            drift_sigmas: 2.0,
            primary_share: 0.3,
            poc0: 1e-4,
            seed: 0,
        }
    }
}

fn ordered(r: [f64; 2], name: &str) -> Result<()> {
    if r[0] <= r[1] && r[0].is_finite() && r[1].is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("synthetic {name} range must satisfy lo <= hi")))
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cdms_per_event[0] == 0 || self.cdms_per_event[0] > self.cdms_per_event[1] {
            return Err(Error::Config("synthetic cdms_per_event must satisfy 1 <= lo <= hi".into()));
        }
        ordered(self.first_t2tca, "first_t2tca")?;
        ordered(self.last_t2tca, "last_t2tca")?;
        ordered(self.miss_m, "miss_m")?;
        ordered(self.sigma_xi_m, "sigma_xi_m")?;
        ordered(self.aspect, "aspect")?;
        if self.last_t2tca[0] < 0.0 || self.miss_m[0] <= 0.0 || self.sigma_xi_m[0] <= 0.0 || self.aspect[0] <= 0.0 {
            return Err(Error::Config("synthetic ranges must be positive".into()));
        }
        if !(self.hbr_m > 0.0) {
            return Err(Error::Config("synthetic hbr_m must be positive".into()));
        }
        if !(0.0..0.99).contains(&self.max_correlation) {
            return Err(Error::Config("synthetic max_correlation must lie in [0, 0.99)".into()));
        }
        for (name, p) in [("rotation_rate", self.rotation_rate), ("drift_rate", self.drift_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("synthetic {name} must lie in [0, 1]")));
            }
        }
        if !(self.primary_share > 0.0 && self.primary_share < 1.0) {
            return Err(Error::Config("synthetic primary_share must lie in (0, 1)".into()));
        }
        if self.cov_growth < 0.0 || self.mean_noise < 0.0 || self.cov_noise < 0.0 || self.drift_sigmas < 0.0 {
            return Err(Error::Config("synthetic noise levels must be non-negative".into()));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.random::<f64>()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Covariance with standard deviations `sx`, `sz` and correlation `rho`.
fn cov_from(sx: f64, sz: f64, rho: f64) -> Cov2<f64> {
    Cov2::new(sx * sx, sz * sz, rho * sx * sz)
}

fn event(spec: &SyntheticSpec, index: usize) -> Result<EventSequence<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);

    let miss = (uniform(&mut rng, [spec.miss_m[0].ln(), spec.miss_m[1].ln()])).exp();
    let phase = std::f64::consts::TAU * rng.random::<f64>();
    let mu_true = [miss * phase.cos(), miss * phase.sin()];
    let sx = uniform(&mut rng, spec.sigma_xi_m);
    let sz = sx * uniform(&mut rng, spec.aspect);
    let rho = spec.max_correlation * (2.0 * rng.random::<f64>() - 1.0);

    let count = rng.random_range(spec.cdms_per_event[0]..=spec.cdms_per_event[1]);
    let t_first = uniform(&mut rng, spec.first_t2tca);
    let t_last = uniform(&mut rng, spec.last_t2tca).min(t_first);
    let rotate_at = (count > 1 && rng.random::<f64>() < spec.rotation_rate).then(|| rng.random_range(1..count));
    let drift = (rng.random::<f64>() < spec.drift_rate).then(|| {
        let a = std::f64::consts::TAU * rng.random::<f64>();
        [spec.drift_sigmas * sx * a.cos(), spec.drift_sigmas * sz * a.sin()]
    });

    let mut cdms = Vec::with_capacity(count);
    for i in 0..count {
        let t = if count == 1 {
            t_last
        } else {
            t_first + (t_last - t_first) * i as f64 / (count - 1) as f64
        };
        let grow = 1.0 + spec.cov_growth * t;
        let (z1, z2, z3, z4) = (normal(&mut rng), normal(&mut rng), normal(&mut rng), normal(&mut rng));
        let sx_i = sx * grow * (spec.cov_noise * z1).exp();
        let sz_i = sz * grow * (spec.cov_noise * z2).exp();
        let mut cov = cov_from(sx_i, sz_i, rho);
        if rotate_at.is_some_and(|k| i >= k) {
            cov = Cov2::new(cov.zz, cov.xx, -cov.xz);
        }
        // Mean scatter along the current covariance's axes.
        let l11 = cov.xx.sqrt();
        let l21 = cov.xz / l11;
        let l22 = (cov.zz - l21 * l21).max(0.0).sqrt();
        let mut mu = [
            mu_true[0] + spec.mean_noise * l11 * z3,
            mu_true[1] + spec.mean_noise * (l21 * z3 + l22 * z4),
        ];
        if let Some(d) = drift {
            let f = if t_first > t_last { (t - t_last) / (t_first - t_last) } else { 0.0 };
            mu = [mu[0] + f * d[0], mu[1] + f * d[1]];
        }
        let p = spec.primary_share;
        let rec = CdmRecord::new(t, mu, cov, spec.hbr_m)?.with_split_covariance(cov.scaled(p), cov.scaled(1.0 - p));
        cdms.push(rec);
    }
    let true_poc = poc(&PocInputs::new(mu_true, cov_from(sx, sz, rho), spec.hbr_m), 1e-8)?;
    Ok(EventSequence::new(format!("SYN{index:05}"), cdms)?.with_truth(GroundTruth {
        true_poc,
        positive: true_poc >= spec.poc0,
    }))
}

/// Reproducible labelled events; event `i` depends only on the seed and `i`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<EventSequence<f64>>> {
    spec.validate()?;
    (0..spec.n_events).map(|i| event(spec, i)).collect()
}
