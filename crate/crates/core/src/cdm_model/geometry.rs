use serde::{Deserialize, Serialize};

use super::Cov2;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative state of object 1 with respect to object 2 at TCA.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeState3D<T> {
    /// m
    pub position: [T; 3],
    /// m/s
    pub velocity: [T; 3],
    /// Combined position covariance, m².
    pub covariance: [[T; 3]; 3],
}

/// Orthonormal frame of the encounter plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpactPlaneBasis<T> {
    pub xi: [T; 3],
    pub zeta: [T; 3],
    pub normal: [T; 3],
}

fn dot<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm<T: Real>(a: &[T; 3]) -> T {
    dot(a, a).sqrt()
}

fn scale<T: Real>(a: &[T; 3], k: T) -> [T; 3] {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn reject<T: Real>(a: &[T; 3], unit: &[T; 3]) -> [T; 3] {
    let p = dot(a, unit);
    [a[0] - p * unit[0], a[1] - p * unit[1], a[2] - p * unit[2]]
}

impl<T: Real> ImpactPlaneBasis<T> {
    /// Frame normal to `velocity`, with ξ along the in-plane part of
    /// `position` (or an arbitrary in-plane axis when that part vanishes).
    pub fn new(position: &[T; 3], velocity: &[T; 3]) -> Result<Self> {
        let speed = norm(velocity);
        if !(speed > T::zero()) || !speed.is_finite() {
            return Err(Error::Geometry("relative velocity is zero".into()));
        }
        let normal = scale(velocity, speed.recip());
        let perp = reject(position, &normal);
        let perp_norm = norm(&perp);
        let tiny = T::epsilon() * T::lit(1e3) * norm(position).max(T::min_positive_value());
        let xi = if perp_norm > tiny {
            scale(&perp, perp_norm.recip())
        } else {
            // Axis least aligned with the normal.
            let mut axis = [T::zero(); 3];
            let k = (0..3)
                .min_by(|&i, &j| normal[i].abs().partial_cmp(&normal[j].abs()).unwrap())
                .unwrap();
            axis[k] = T::one();
            let r = reject(&axis, &normal);
            scale(&r, norm(&r).recip())
        };
        let zeta = cross(&normal, &xi);
        Ok(ImpactPlaneBasis { xi, zeta, normal })
    }

    pub fn project_vector(&self, v: &[T; 3]) -> [T; 2] {
        [dot(&self.xi, v), dot(&self.zeta, v)]
    }

    /// `B C Bᵀ` with B the 2×3 matrix of in-plane axes.
    pub fn project_covariance(&self, c: &[[T; 3]; 3]) -> Cov2<T> {
        let apply = |u: &[T; 3]| -> [T; 3] {
            [
                c[0][0] * u[0] + c[0][1] * u[1] + c[0][2] * u[2],
                c[1][0] * u[0] + c[1][1] * u[1] + c[1][2] * u[2],
                c[2][0] * u[0] + c[2][1] * u[1] + c[2][2] * u[2],
            ]
        };
        let cx = apply(&self.xi);
        let cz = apply(&self.zeta);
        let xz = T::lit(0.5) * (dot(&self.zeta, &cx) + dot(&self.xi, &cz));
        Cov2::new(dot(&self.xi, &cx), dot(&self.zeta, &cz), xz)
    }
}

/// Projects a 3-D relative state onto the impact plane, returning the miss
/// vector and the 2×2 combined covariance.
pub fn project_to_impact_plane<T: Real>(state: &RelativeState3D<T>) -> Result<([T; 2], Cov2<T>)> {
    let c = &state.covariance;
    for i in 0..3 {
        for j in 0..3 {
            if !c[i][j].is_finite() {
                return Err(Error::Domain("non-finite covariance entry".into()));
            }
        }
    }
    let basis = ImpactPlaneBasis::new(&state.position, &state.velocity)?;
    let mu = basis.project_vector(&state.position);
    let mut cov = basis.project_covariance(c);
    // Symmetrised projection of a PSD matrix; trim rounding past the boundary.
    let bound = (cov.xx.max(T::zero()) * cov.zz.max(T::zero())).sqrt();
    if cov.xz.abs() > bound {
        cov.xz = bound.copysign(cov.xz);
    }
    Ok((mu, cov))
}

/// Combined covariance of two independent objects.
pub fn combine_covariances<T: Real>(a: &Cov2<T>, b: &Cov2<T>) -> Cov2<T> {
    Cov2::new(a.xx + b.xx, a.zz + b.zz, a.xz + b.xz)
}
