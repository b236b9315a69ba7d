//! Rotation and rigid-transform algebra.
//!
//! Quaternions use `(w, x, y, z)` order. Extraction from a matrix always
//! returns the canonical sign (`w >= 0`, ties broken on the first non-zero
//! vector component). Frames are right-handed; the camera frame has x to the
//! right, y down and z along the optical axis.

use std::fmt;

use nalgebra::{Matrix3, Quaternion, Rotation3};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Tolerance on `|‖q‖ - 1|` accepted by [`UnitQuaternion::new`].
pub const QUAT_NORM_TOL: f64 = 1e-9;

/// Tolerance on `‖MMᵀ - I‖∞` and `|det M - 1|` accepted by [`RotationMatrix::from_rows`].
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// A rotation stored as a unit quaternion.
#[derive(Clone, Copy, PartialEq)]
pub struct UnitQuaternion(nalgebra::UnitQuaternion<f64>);

impl UnitQuaternion {
    /// Builds a quaternion from `(w, x, y, z)`, rejecting inputs whose norm
    /// is not within [`QUAT_NORM_TOL`] of one.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > QUAT_NORM_TOL {
            return Err(Error::invalid(format!(
                "quaternion ({w}, {x}, {y}, {z}) has norm {norm}, expected 1"
            )));
        }
        // unit to rounding: stored as given
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Self(nalgebra::UnitQuaternion::new_unchecked(q)));
        }
        Ok(Self(nalgebra::UnitQuaternion::new_normalize(q)))
    }

    /// Normalizes an arbitrary non-zero quaternion (e.g. a network output).
    pub fn normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::invalid("cannot normalize a zero or non-finite quaternion"));
        }
        Ok(Self(nalgebra::UnitQuaternion::new_normalize(q)))
    }

    pub fn from_array(q: [f64; 4]) -> Result<Self> {
        Self::new(q[0], q[1], q[2], q[3])
    }

    pub fn identity() -> Self {
        Self(nalgebra::UnitQuaternion::identity())
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::invalid("rotation axis must be non-zero"));
        }
        let unit = nalgebra::Unit::new_unchecked(axis / n);
        Ok(Self(nalgebra::UnitQuaternion::from_axis_angle(&unit, angle)))
    }

    /// Exponential map of a rotation vector (axis · angle).
    pub fn from_rotation_vector(v: &Vec3) -> Self {
        Self(nalgebra::UnitQuaternion::from_scaled_axis(*v))
    }

    pub fn w(&self) -> f64 {
        self.0.w
    }
    pub fn x(&self) -> f64 {
        self.0.i
    }
    pub fn y(&self) -> f64 {
        self.0.j
    }
    pub fn z(&self) -> f64 {
        self.0.k
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w(), self.x(), self.y(), self.z()]
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    pub fn negated(&self) -> Self {
        let q = self.0.into_inner();
        Self(nalgebra::UnitQuaternion::new_unchecked(-q))
    }

    /// Same rotation with `w >= 0`.
    pub fn canonical(&self) -> Self {
        let [w, x, y, z] = self.to_array();
        let flip = if w != 0.0 {
            w < 0.0
        } else if x != 0.0 {
            x < 0.0
        } else if y != 0.0 {
            y < 0.0
        } else {
            z < 0.0
        };
        if flip {
            self.negated()
        } else {
            *self
        }
    }

    /// 4D inner product of the quaternion coefficients.
    pub fn dot(&self, other: &Self) -> f64 {
        self.0.coords.dot(&other.0.coords)
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0.transform_vector(v)
    }

    pub fn to_matrix(&self) -> RotationMatrix {
        quat_to_matrix(self)
    }
}

impl fmt::Debug for UnitQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [w, x, y, z] = self.to_array();
        write!(f, "UnitQuaternion({w}, {x}, {y}, {z})")
    }
}

/// Row-major 3×3 rotation matrix with `det = +1`.
#[derive(Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    /// Validates orthonormality and orientation within [`ORTHONORMAL_TOL`].
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        let m = Matrix3::from_row_slice(&[
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0], rows[2][1],
            rows[2][2],
        ]);
        let candidate = Self(m);
        let ortho = candidate.orthonormality_error();
        let det = candidate.determinant();
        if !ortho.is_finite() || ortho > ORTHONORMAL_TOL || (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "matrix is not a rotation (‖MMᵀ−I‖∞ = {ortho:e}, det = {det})"
            )));
        }
        Ok(candidate)
    }

    /// Rows are assumed orthonormal; used by constructors that guarantee it.
    pub(crate) fn from_rows_unchecked(x: Vec3, y: Vec3, z: Vec3) -> Self {
        Self(Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn row(&self, i: usize) -> Vec3 {
        self.0.row(i).transpose()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// `‖MMᵀ − I‖∞` (max absolute entry).
    pub fn orthonormality_error(&self) -> f64 {
        (self.0 * self.0.transpose() - Matrix3::identity()).amax()
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.0 - other.0).amax()
    }

    pub fn to_quaternion(&self) -> UnitQuaternion {
        matrix_to_quat(self)
    }
}

impl fmt::Debug for RotationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RotationMatrix({:?})", self.rows())
    }
}

pub fn quat_to_matrix(q: &UnitQuaternion) -> RotationMatrix {
    RotationMatrix(q.0.to_rotation_matrix().into_inner())
}

/// Canonical (`w >= 0`) quaternion of a rotation matrix.
pub fn matrix_to_quat(m: &RotationMatrix) -> UnitQuaternion {
    let rot = Rotation3::from_matrix_unchecked(m.0);
    UnitQuaternion(nalgebra::UnitQuaternion::from_rotation_matrix(&rot)).canonical()
}

/// Geodesic distance on SO(3): `2·acos(|q1·q2|)`, in `[0, π]`.
///
/// Evaluated as `2·atan2(‖v‖, |w|)` of the relative rotation, which stays
/// accurate near zero where `acos` loses half the digits.
pub fn geodesic_angle(q1: &UnitQuaternion, q2: &UnitQuaternion) -> f64 {
    let rel = q1.0.inverse() * q2.0;
    2.0 * rel.imag().norm().atan2(rel.w.abs())
}

/// Distance between quaternion coefficient vectors modulo sign.
pub fn quaternion_distance(q1: &UnitQuaternion, q2: &UnitQuaternion) -> f64 {
    let a = q1.0.coords;
    let b = q2.0.coords;
    (a - b).norm().min((a + b).norm())
}

/// Rigid transform `x ↦ R·x + t`, translation in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose6D {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl Pose6D {
    pub fn new(rotation: UnitQuaternion, translation: Vec3) -> Result<Self> {
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("pose translation must be finite"));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.rotate(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let inv = self.rotation.inverse();
        Self {
            rotation: inv,
            translation: -inv.rotate(&self.translation),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn identity_quaternion_gives_identity_matrix() {
        let m = quat_to_matrix(&UnitQuaternion::identity());
        assert_eq!(m.rows(), RotationMatrix::identity().rows());
    }

    #[test]
    fn quarter_turn_about_z_maps_x_to_y() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = UnitQuaternion::new(h, 0.0, 0.0, h).unwrap();
        let v = quat_to_matrix(&q).apply(&Vec3::x());
        assert_abs_diff_eq!(v, Vec3::y(), epsilon = 1e-15);
        assert_eq!(quat_to_matrix(&q).rows(), quat_to_matrix(&q.negated()).rows());
    }

    #[test]
    fn non_unit_quaternion_is_rejected() {
        assert!(matches!(
            UnitQuaternion::new(1.0, 0.1, 0.0, 0.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(UnitQuaternion::normalize(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn matrix_extraction_is_canonical() {
        assert_eq!(
            matrix_to_quat(&RotationMatrix::identity()).to_array(),
            [1.0, 0.0, 0.0, 0.0]
        );
        let rz180 = RotationMatrix::from_rows([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let q = matrix_to_quat(&rz180).to_array();
        assert_abs_diff_eq!(q[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q[3], 1.0, epsilon = 1e-15);

        let q = UnitQuaternion::new(-0.5, 0.5, -0.5, 0.5).unwrap();
        assert!(matrix_to_quat(&q.to_matrix()).w() >= 0.0);
    }

    #[test]
    fn non_orthonormal_matrix_is_rejected() {
        let r = RotationMatrix::from_rows([[1.0, 0.01, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
        let reflection = RotationMatrix::from_rows([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(reflection.is_err());
    }

    #[test]
    fn geodesic_angle_cases() {
        let q = UnitQuaternion::from_axis_angle(&Vec3::new(1.0, 2.0, 3.0), 0.7).unwrap();
        assert!(geodesic_angle(&q, &q) < 1e-15);
        assert_abs_diff_eq!(geodesic_angle(&q, &q.negated()), 0.0, epsilon = 1e-15);
        let rz = UnitQuaternion::from_axis_angle(&Vec3::z(), FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(
            geodesic_angle(&UnitQuaternion::identity(), &rz),
            FRAC_PI_2,
            epsilon = 1e-12
        );
        let flip = UnitQuaternion::from_axis_angle(&Vec3::x(), PI).unwrap();
        assert_abs_diff_eq!(
            geodesic_angle(&UnitQuaternion::identity(), &flip),
            PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pose_inverse_composes_to_identity() {
        let p = Pose6D::new(
            UnitQuaternion::from_axis_angle(&Vec3::new(0.3, -1.0, 0.2), 1.1).unwrap(),
            Vec3::new(0.5, -2.0, 3.0),
        )
        .unwrap();
        let id = p.compose(&p.inverse());
        assert_abs_diff_eq!(id.translation, Vec3::zeros(), epsilon = 1e-15);
        assert!(geodesic_angle(&id.rotation, &UnitQuaternion::identity()) < 1e-15);
        assert!(Pose6D::new(UnitQuaternion::identity(), Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
    }
}
