//! Apparent-viewpoint correction.
//!
//! A virtual perspective camera whose optical axis passes through the object
//! center sees the object with orientation `R_p = R_adj · R`. `R_adj` has rows
//! X, Y, Z: the virtual camera axes expressed in the fisheye (global) frame,
//! so `R_adj · unit(t) = e_z`.

use crate::error::{Error, Result};
use crate::fisheye::FisheyeIntrinsics;
use crate::geometry::{matrix_to_quat, RotationMatrix, UnitQuaternion, Vec3};
use crate::sphere::{pixel_to_spherical, TangentPoint};

/// Translations shorter than this have no defined viewing direction.
pub const MIN_TRANSLATION_NORM: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewpointAdjust {
    pub tangent: TangentPoint,
    pub r_adj: RotationMatrix,
}

impl ViewpointAdjust {
    pub fn quaternion(&self) -> UnitQuaternion {
        matrix_to_quat(&self.r_adj)
    }

    /// Global (fisheye-frame) vector to virtual-camera coordinates.
    pub fn to_virtual(&self, v: &Vec3) -> Vec3 {
        self.r_adj.apply(v)
    }

    pub fn from_virtual(&self, v: &Vec3) -> Vec3 {
        self.r_adj.transpose().apply(v)
    }
}

fn check_translation(t: &Vec3) -> Result<f64> {
    let n = t.norm();
    if !n.is_finite() || n <= MIN_TRANSLATION_NORM {
        return Err(Error::invalid(format!(
            "translation norm {n} too small to define a viewing direction"
        )));
    }
    Ok(n)
}

/// Tangent point pierced by the ray toward the object center.
pub fn tangent_from_translation(t: &Vec3) -> Result<TangentPoint> {
    check_translation(t)?;
    let theta0 = t.y.atan2(t.x.hypot(t.z));
    let phi0 = if t.x == 0.0 && t.z == 0.0 {
        0.0
    } else {
        t.x.atan2(t.z)
    };
    Ok(TangentPoint::new(theta0, phi0))
}

/// Tangent point under a fisheye pixel, e.g. an ROI center.
pub fn tangent_from_pixel(u: f64, v: f64, k: &FisheyeIntrinsics) -> Result<TangentPoint> {
    Ok(pixel_to_spherical(u, v, k)?.into())
}

pub fn rotation_adjust(t0: &TangentPoint) -> ViewpointAdjust {
    let (st, ct) = t0.theta0.sin_cos();
    let (sp, cp) = t0.phi0.sin_cos();
    let x = Vec3::new(cp, 0.0, -sp);
    let y = Vec3::new(-st * sp, ct, -st * cp);
    let z = Vec3::new(ct * sp, st, ct * cp);
    ViewpointAdjust {
        tangent: *t0,
        r_adj: RotationMatrix::from_rows_unchecked(x, y, z),
    }
}

pub fn adjust_for_translation(t: &Vec3) -> Result<ViewpointAdjust> {
    Ok(rotation_adjust(&tangent_from_translation(t)?))
}

/// `R_p = R_adj · R`.
pub fn apparent_orientation(r: &UnitQuaternion, t: &Vec3) -> Result<UnitQuaternion> {
    let adj = adjust_for_translation(t)?;
    Ok(adj.quaternion().compose(r))
}

/// `R = R_adjᵀ · R_p`.
pub fn recover_global_orientation(r_p: &UnitQuaternion, t: &Vec3) -> Result<UnitQuaternion> {
    let adj = adjust_for_translation(t)?;
    Ok(adj.quaternion().inverse().compose(r_p))
}

/// `R_adj · t`, which equals `(0, 0, ‖t‖)`.
pub fn translation_in_virtual_frame(t: &Vec3) -> Result<Vec3> {
    Ok(adjust_for_translation(t)?.to_virtual(t))
}
