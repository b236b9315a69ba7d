//! Fisheye pixel ↔ unit sphere mappings and the gnomonic projection pair.
//!
//! A spherical coordinate `(θ, φ)` names the unit ray
//! `(cos θ sin φ, sin θ, cos θ cos φ)`: θ is the elevation toward +y (down in
//! the image) and φ the azimuth toward +x measured from the optical axis.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fisheye::{pixel_to_ray, ray_to_pixel, FisheyeIntrinsics};
use crate::geometry::Vec3;

/// Forward gnomonic denominators at or below this value are rejected.
pub const BEHIND_PLANE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphericalCoord {
    /// Elevation in `[−π/2, π/2]`.
    pub theta: f64,
    /// Azimuth in `(−π, π]`.
    pub phi: f64,
}

impl SphericalCoord {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self {
            theta,
            phi: wrap_angle(phi),
        }
    }
}

/// Tangent point `(θ₀, φ₀)` of a virtual perspective camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentPoint {
    pub theta0: f64,
    pub phi0: f64,
}

impl TangentPoint {
    pub fn new(theta0: f64, phi0: f64) -> Self {
        Self {
            theta0,
            phi0: wrap_angle(phi0),
        }
    }

    pub fn from_degrees(theta0_deg: f64, phi0_deg: f64) -> Self {
        Self::new(theta0_deg.to_radians(), phi0_deg.to_radians())
    }

    pub fn as_spherical(&self) -> SphericalCoord {
        SphericalCoord {
            theta: self.theta0,
            phi: self.phi0,
        }
    }

    pub fn ray(&self) -> Vec3 {
        spherical_to_ray(&self.as_spherical())
    }
}

impl From<SphericalCoord> for TangentPoint {
    fn from(s: SphericalCoord) -> Self {
        Self {
            theta0: s.theta,
            phi0: s.phi,
        }
    }
}

/// Tangent-plane coordinates normalized by the virtual focal length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentPlaneCoord {
    pub x: f64,
    pub y: f64,
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

pub fn spherical_to_ray(s: &SphericalCoord) -> Vec3 {
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.phi.sin_cos();
    Vec3::new(ct * sp, st, ct * cp)
}

/// Inverse of [`spherical_to_ray`] for any non-zero ray; φ is 0 at the poles.
pub fn ray_to_spherical(ray: &Vec3) -> Result<SphericalCoord> {
    let horizontal = ray.x.hypot(ray.z);
    if !(horizontal.is_finite() && ray.y.is_finite()) || (horizontal == 0.0 && ray.y == 0.0) {
        return Err(Error::invalid("ray must be non-zero and finite"));
    }
    let theta = ray.y.atan2(horizontal);
    let phi = if horizontal == 0.0 {
        0.0
    } else {
        wrap_angle(ray.x.atan2(ray.z))
    };
    Ok(SphericalCoord { theta, phi })
}

pub fn pixel_to_spherical(u: f64, v: f64, k: &FisheyeIntrinsics) -> Result<SphericalCoord> {
    ray_to_spherical(&pixel_to_ray(u, v, k)?)
}

pub fn spherical_to_pixel(s: &SphericalCoord, k: &FisheyeIntrinsics) -> Result<(f64, f64)> {
    ray_to_pixel(&spherical_to_ray(s), k)
}

/// Gnomonic projection of `s` onto the plane tangent at `t0`.
pub fn gnomonic_forward(s: &SphericalCoord, t0: &TangentPoint) -> Result<TangentPlaneCoord> {
    let (st, ct) = s.theta.sin_cos();
    let (st0, ct0) = t0.theta0.sin_cos();
    let (sd, cd) = (s.phi - t0.phi0).sin_cos();
    let denominator = st0 * st + ct0 * ct * cd;
    if !(denominator > BEHIND_PLANE_TOL) {
        return Err(Error::BehindPlane { denominator });
    }
    Ok(TangentPlaneCoord {
        x: ct * sd / denominator,
        y: (ct0 * st - st0 * ct * cd) / denominator,
    })
}

/// Inverse gnomonic projection from the plane tangent at `t0`.
///
/// Uses the two-argument arctangent form of the standard inverse:
/// `sin θ = (sin θ₀ + y cos θ₀)/√(1+x²+y²)` and
/// `φ = φ₀ + atan2(x, cos θ₀ − y sin θ₀)`.
pub fn gnomonic_inverse(p: &TangentPlaneCoord, t0: &TangentPoint) -> Result<SphericalCoord> {
    if !(p.x.is_finite() && p.y.is_finite()) {
        return Err(Error::invalid("tangent-plane coordinates must be finite"));
    }
    let (st0, ct0) = t0.theta0.sin_cos();
    let vertical = st0 + p.y * ct0;
    let along = ct0 - p.y * st0;
    let horizontal = along.hypot(p.x);
    let theta = vertical.atan2(horizontal);
    let phi = if horizontal == 0.0 {
        0.0
    } else {
        wrap_angle(t0.phi0 + p.x.atan2(along))
    };
    Ok(SphericalCoord { theta, phi })
}
