//! Probability of collision for short encounters.
//!
//! The PoC is the mass of the bivariate normal `N(μ, Σ)` inside the disk of
//! radius `R` centred at the origin of the impact plane. In the eigenbasis of
//! `Σ` the two coordinates are independent, so the inner integral across the
//! chord reduces to a difference of normal CDFs and only one dimension needs
//! quadrature. Substituting `x = R sin θ` removes the square-root behaviour
//! at the rim, leaving a smooth integrand on `[-π/2, π/2]`.

mod bounds;
mod spoc;

pub use bounds::{poc_bounds, Box5, BoundsConfig, PocRange};
pub use spoc::{spoc, spoc_combined, SpocConfig, SpocResult};

use serde::{Deserialize, Serialize};

use crate::cdm_model::{CdmRecord, Cov2};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::scalar::{normal_interval_mass, Real};

/// Below this covariance determinant (m⁴) evaluation is refused.
pub const DEGENERATE_DET: f64 = 1e-20;

/// Default relative tolerance of the quadrature.
pub const DEFAULT_REL_TOL: f64 = 1e-6;

const MAX_SEGMENTS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PocInputs<T> {
    pub mu: [T; 2],
    pub cov: Cov2<T>,
    pub hbr: T,
}

impl<T: Real> PocInputs<T> {
    pub fn new(mu: [T; 2], cov: Cov2<T>, hbr: T) -> Self {
        PocInputs { mu, cov, hbr }
    }

    pub fn from_record(rec: &CdmRecord<T>) -> Self {
        PocInputs::new(rec.mu, rec.cov, rec.hbr)
    }
}

/// Probability of collision within `rel_tol` relative error.
pub fn poc<T: Real>(inputs: &PocInputs<T>, rel_tol: T) -> Result<T> {
    let PocInputs { mu, cov, hbr } = *inputs;
    let finite = mu[0].is_finite() && mu[1].is_finite() && cov.is_finite() && hbr.is_finite();
    if !finite {
        return Err(Error::Domain("non-finite PoC input".into()));
    }
    if !(hbr > T::zero()) {
        return Err(Error::Domain(format!("hard-body radius must be positive, got {hbr}")));
    }
    if !(rel_tol > T::zero() && rel_tol <= T::lit(1e-2)) {
        return Err(Error::Domain(format!("rel_tol {rel_tol} outside (0, 1e-2]")));
    }
    if !(cov.xx > T::zero() && cov.zz > T::zero()) {
        return Err(Error::Domain("variances must be positive".into()));
    }
    let det = cov.det();
    if !(det > T::lit(DEGENERATE_DET)) {
        return Err(Error::DegenerateCovariance { det: det.as_f64() });
    }

    let ([l_big, _], [c, s]) = cov.eigen();
    let l_small = det / l_big;
    // Outer coordinate along the minor axis, inner along the major axis.
    let outer_mean = -s * mu[0] + c * mu[1];
    let inner_mean = c * mu[0] + s * mu[1];
    let outer_sd = l_small.sqrt();
    let inner_sd = l_big.sqrt();

    let r = hbr;
    let norm = (T::TAU() * l_small).sqrt().recip();
    let two = T::lit(2.0);
    let integrand = |theta: T| -> T {
        let (sin, cos) = theta.sin_cos();
        let x = r * sin;
        let h = r * cos;
        if h <= T::zero() {
            return T::zero();
        }
        let d = x - outer_mean;
        let density = norm * (-(d * d) / (two * l_small)).exp();
        if density == T::zero() {
            return T::zero();
        }
        h * density * normal_interval_mass(-h, h, inner_mean, inner_sd)
    };

    let breaks = feature_angles(r, outer_mean, outer_sd, inner_mean.abs(), inner_sd);
    let half_pi = T::FRAC_PI_2();
    let abs_floor = T::lit(1e-300).max(T::min_positive_value());
    let res = integrate(integrand, -half_pi, half_pi, &breaks, rel_tol, abs_floor, MAX_SEGMENTS);
    Ok(res.value.max(T::zero()).min(T::one()))
}

/// Angles where the integrand changes character: around the peak of the
/// outer density and where the chord half-length crosses the inner mean.
fn feature_angles<T: Real>(r: T, m_out: T, s_out: T, m_in_abs: T, s_in: T) -> Vec<T> {
    let mut out = Vec::with_capacity(24);
    let mut push_x = |x: T| {
        if x > -r && x < r {
            out.push((x / r).asin());
        }
    };
    for k in [-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0] {
        push_x(m_out + T::lit(k) * s_out);
    }
    if m_out.abs() >= r {
        let edge = r.copysign(m_out);
        for j in [0.5, 2.0, 6.0] {
            push_x(edge - (T::lit(j) * s_out).copysign(m_out));
        }
    }
    for k in [-3.0, 0.0, 3.0] {
        let h = m_in_abs + T::lit(k) * s_in;
        if h > T::zero() && h < r {
            let t = (h / r).acos();
            out.push(t);
            out.push(-t);
        }
    }
    out
}
