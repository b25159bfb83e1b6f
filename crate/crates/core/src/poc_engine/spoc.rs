//! Scaled PoC: the largest PoC over scale factors applied to the primary and
//! secondary covariances, `Σ = kp² Σp + ks² Σs`.

use serde::{Deserialize, Serialize};

use super::{poc, PocInputs};
use crate::cdm_model::{combine_covariances, Cov2};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real"))]
pub struct SpocConfig<T: Real> {
    pub kp_range: [T; 2],
    pub ks_range: [T; 2],
    pub grid_resolution: usize,
}

impl<T: Real> Default for SpocConfig<T> {
    fn default() -> Self {
        SpocConfig {
            kp_range: [T::lit(0.5), T::lit(3.0)],
            ks_range: [T::lit(0.5), T::lit(3.0)],
            grid_resolution: 21,
        }
    }
}

impl<T: Real> SpocConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("kp_range", self.kp_range), ("ks_range", self.ks_range)] {
            if !(r[0] > T::zero() && r[0] <= r[1] && r[1].is_finite()) {
                return Err(Error::Config(format!("{name} must satisfy 0 < lo <= hi")));
            }
        }
        if self.grid_resolution < 2 {
            return Err(Error::Config("spoc grid_resolution must be >= 2".into()));
        }
        Ok(())
    }

    fn axis(range: [T; 2], n: usize) -> Vec<T> {
        if range[0] == range[1] {
            return vec![range[0]];
        }
        (0..n)
            .map(|i| range[0] + (range[1] - range[0]) * T::from_usize(i).unwrap() / T::from_usize(n - 1).unwrap())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpocResult<T> {
    pub spoc: T,
    pub kp: T,
    pub ks: T,
}

/// Grid search over the configured ranges followed by a bounded compass
/// refinement from the best grid node.
pub fn spoc<T: Real>(
    cov_p: &Cov2<T>,
    cov_s: &Cov2<T>,
    mu: [T; 2],
    hbr: T,
    cfg: &SpocConfig<T>,
    rel_tol: T,
) -> Result<SpocResult<T>> {
    cfg.validate()?;
    let eval = |kp: T, ks: T| -> Result<T> {
        let cov = combine_covariances(&cov_p.scaled(kp * kp), &cov_s.scaled(ks * ks));
        poc(&PocInputs::new(mu, cov, hbr), rel_tol)
    };
    maximise_2d(eval, cfg)
}

/// Variant for records without separate object covariances: the combined
/// covariance is scaled by `k²` with `k` drawn from `kp_range`.
pub fn spoc_combined<T: Real>(
    cov: &Cov2<T>,
    mu: [T; 2],
    hbr: T,
    cfg: &SpocConfig<T>,
    rel_tol: T,
) -> Result<SpocResult<T>> {
    cfg.validate()?;
    let single = SpocConfig {
        kp_range: cfg.kp_range,
        ks_range: [T::one(), T::one()],
        grid_resolution: cfg.grid_resolution,
    };
    let eval = |k: T, _: T| poc(&PocInputs::new(mu, cov.scaled(k * k), hbr), rel_tol);
    let mut r = maximise_2d(eval, &single)?;
    r.ks = r.kp;
    Ok(r)
}

fn maximise_2d<T: Real, F: Fn(T, T) -> Result<T>>(eval: F, cfg: &SpocConfig<T>) -> Result<SpocResult<T>> {
    let kps = SpocConfig::axis(cfg.kp_range, cfg.grid_resolution);
    let kss = SpocConfig::axis(cfg.ks_range, cfg.grid_resolution);
    let mut best = SpocResult {
        spoc: -T::one(),
        kp: kps[0],
        ks: kss[0],
    };
    for &kp in &kps {
        for &ks in &kss {
            let v = eval(kp, ks)?;
            if v > best.spoc {
                best = SpocResult { spoc: v, kp, ks };
            }
        }
    }
    let span = |r: [T; 2]| r[1] - r[0];
    let cells = T::from_usize(cfg.grid_resolution - 1).unwrap();
    let mut step = [span(cfg.kp_range) / cells, span(cfg.ks_range) / cells];
    let stop = [step[0] * T::lit(1e-6), step[1] * T::lit(1e-6)];
    let clamp = |x: T, r: [T; 2]| x.max(r[0]).min(r[1]);
    while step[0] > stop[0] || step[1] > stop[1] {
        let mut improved = false;
        for (dkp, dks) in [(T::one(), T::zero()), (-T::one(), T::zero()), (T::zero(), T::one()), (T::zero(), -T::one())] {
            let kp = clamp(best.kp + dkp * step[0], cfg.kp_range);
            let ks = clamp(best.ks + dks * step[1], cfg.ks_range);
            if kp == best.kp && ks == best.ks {
                continue;
            }
            let v = eval(kp, ks)?;
            if v > best.spoc {
                best = SpocResult { spoc: v, kp, ks };
                improved = true;
            }
        }
        if !improved {
            step = [step[0] * T::lit(0.5), step[1] * T::lit(0.5)];
        }
    }
    Ok(best)
}
