//! Pose error metrics and the evaluation harness.

mod harness;
mod symmetry;

pub use self::harness::{
    run_harness, ConstantPosePredictor, EvalDataset, GroundTruthRecord, HarnessConfig, NoisyOraclePredictor,
    OrientationFrame, PerfectOraclePredictor, PredictionRecord, Predictor, Report, ReportRow,
};
pub use self::symmetry::{ModelPoints, SymmetrySpec, CLOSURE_TOL};

use crate::error::{Error, Result};
use crate::fisheye::{pixel_to_ray, FisheyeIntrinsics};
use crate::geometry::{Pose6D, UnitQuaternion, Vec3};
use crate::remap::RoiBox;

/// Default translation thresholds in meters (5, 10, 20, 30 cm).
pub const DEFAULT_TRANSLATION_THRESHOLDS: [f64; 4] = [0.05, 0.10, 0.20, 0.30];

/// Default orientation thresholds in degrees.
pub const DEFAULT_ORIENTATION_THRESHOLDS_DEG: [f64; 4] = [5.0, 10.0, 20.0, 30.0];

/// Default upper limit of the ADD-S accuracy curve, in meters.
pub const DEFAULT_MAX_ADDS_THRESHOLD: f64 = 0.1;

pub fn translation_error(t_hat: &Vec3, t: &Vec3) -> f64 {
    (t_hat - t).norm()
}

/// Smallest geodesic angle between `q_hat` and any symmetric equivalent of `q`.
///
/// For a continuous axis `a`, the best rotation about `a` is found in closed
/// form: with `p = (q∘g)⁻¹∘q̂`, the achievable cosine of the half angle is
/// `√(p_w² + (p_v·a)²)`.
pub fn orientation_error_sym(q_hat: &UnitQuaternion, q: &UnitQuaternion, sym: &SymmetrySpec) -> f64 {
    sym.discrete()
        .iter()
        .map(|g| {
            let p = q.compose(g).inverse().compose(q_hat);
            let pw = p.w();
            let pv = Vec3::new(p.x(), p.y(), p.z());
            match sym.continuous_axis() {
                Some(axis) => {
                    let along = pv.dot(axis);
                    let across = (pv - axis * along).norm();
                    2.0 * across.atan2(pw.hypot(along))
                }
                None => 2.0 * pv.norm().atan2(pw.abs()),
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// ADD-S: mean over predicted model points of the distance to the closest
/// ground-truth model point.
pub fn adds_error(pose_hat: &Pose6D, pose_gt: &Pose6D, model: &ModelPoints) -> f64 {
    let gt: Vec<Vec3> = model
        .points()
        .iter()
        .map(|x| pose_gt.transform_point(x))
        .collect();
    let total: f64 = model
        .points()
        .iter()
        .map(|x| {
            let p = pose_hat.transform_point(x);
            gt.iter()
                .map(|g| (p - g).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    total / model.len() as f64
}

fn check_errors(errors: &[f64]) -> Result<()> {
    if errors.is_empty() {
        return Err(Error::invalid("error list is empty"));
    }
    if errors.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::invalid("errors must be finite and non-negative"));
    }
    Ok(())
}

/// Area under `accuracy(τ) = fraction{error < τ}` over `τ ∈ [0, max_threshold]`,
/// scaled to `[0, 100]`. Integrates the step function exactly.
pub fn auc_adds(errors: &[f64], max_threshold: f64) -> Result<f64> {
    check_errors(errors)?;
    if !(max_threshold.is_finite() && max_threshold > 0.0) {
        return Err(Error::invalid("max threshold must be positive"));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut area = 0.0;
    let mut below = 0usize;
    let mut tau = 0.0;
    for &e in &sorted {
        if e >= max_threshold {
            break;
        }
        area += below as f64 * (e - tau);
        tau = e;
        below += 1;
    }
    area += below as f64 * (max_threshold - tau);
    Ok(100.0 * area / (n * max_threshold))
}

/// Percentage of errors strictly below each threshold.
pub fn threshold_table(errors: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    check_errors(errors)?;
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) || thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::invalid("thresholds must be strictly ascending"));
    }
    let n = errors.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| 100.0 * errors.iter().filter(|&&e| e < t).count() as f64 / n)
        .collect())
}

/// Normalized offset of a pixel from the ROI center, in ROI half-extents.
pub fn encode_center_offset(u: f64, v: f64, roi: &RoiBox) -> (f64, f64) {
    let (cu, cv) = roi.center();
    ((u - cu) / (0.5 * roi.width()), (v - cv) / (0.5 * roi.height()))
}

/// 3D translation from a normalized ROI offset and a range along the ray.
pub fn recover_translation(
    offset: (f64, f64),
    range: f64,
    roi: &RoiBox,
    k: &FisheyeIntrinsics,
) -> Result<Vec3> {
    let (ox, oy) = offset;
    if !(ox.abs() <= 1.0 && oy.abs() <= 1.0) {
        return Err(Error::invalid(format!(
            "center offset ({ox}, {oy}) lies outside the ROI"
        )));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::invalid("range must be positive"));
    }
    let (cu, cv) = roi.center();
    let u = cu + ox * 0.5 * roi.width();
    let v = cv + oy * 0.5 * roi.height();
    Ok(pixel_to_ray(u, v, k)? * range)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::geometry::geodesic_angle;

    #[test]
    fn translation_errors() {
        let t = Vec3::new(0.2, -0.1, 1.5);
        assert_eq!(translation_error(&t, &t), 0.0);
        assert_abs_diff_eq!(
            translation_error(&(t + Vec3::new(0.03, 0.0, 0.0)), &t),
            0.03,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            translation_error(&Vec3::new(0.03, 0.04, 0.0), &Vec3::zeros()),
            0.05,
            epsilon = 1e-15
        );
    }

    #[test]
    fn symmetric_orientation_errors() {
        let q = UnitQuaternion::from_axis_angle(&Vec3::new(0.2, 1.0, -0.4), 0.9).unwrap();
        let trivial = SymmetrySpec::trivial(1);
        assert!(orientation_error_sym(&q, &q, &trivial) < 1e-15);

        let c2 = SymmetrySpec::cyclic(1, &Vec3::z(), 2).unwrap();
        let flipped = q.compose(&UnitQuaternion::from_axis_angle(&Vec3::z(), PI).unwrap());
        assert!(orientation_error_sym(&flipped, &q, &c2) < 1e-9);

        let quarter = q.compose(&UnitQuaternion::from_axis_angle(&Vec3::z(), FRAC_PI_2).unwrap());
        let brute = c2
            .discrete()
            .iter()
            .map(|g| geodesic_angle(&quarter, &q.compose(g)))
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(brute, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(
            orientation_error_sym(&quarter, &q, &c2),
            FRAC_PI_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn adds_cases() {
        let model = ModelPoints::new(
            1,
            (0..8)
                .map(|k| {
                    let a = PI / 4.0 * k as f64;
                    Vec3::new(0.1 * a.cos(), 0.1 * a.sin(), 0.0)
                })
                .collect(),
        )
        .unwrap();
        let gt = Pose6D::new(UnitQuaternion::identity(), Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(adds_error(&gt, &gt, &model), 0.0);
        let turned = Pose6D {
            rotation: UnitQuaternion::from_axis_angle(&Vec3::z(), PI / 4.0).unwrap(),
            ..gt
        };
        assert!(adds_error(&turned, &gt, &model) < 1e-15);

        let single = ModelPoints::new(2, vec![Vec3::zeros()]).unwrap();
        let shifted = Pose6D {
            translation: gt.translation + Vec3::new(0.0, 0.02, 0.0),
            ..gt
        };
        assert_abs_diff_eq!(adds_error(&shifted, &gt, &single), 0.02, epsilon = 1e-15);
    }

    #[test]
    fn auc_cases() {
        assert_eq!(auc_adds(&[0.0; 5], 0.1).unwrap(), 100.0);
        assert_eq!(auc_adds(&[0.2, 0.11, 0.1], 0.1).unwrap(), 0.0);
        assert_eq!(auc_adds(&[0.0, 0.0, 0.5, 0.5], 0.1).unwrap(), 50.0);
        assert_abs_diff_eq!(auc_adds(&[0.05], 0.1).unwrap(), 50.0, epsilon = 1e-12);
        assert!(auc_adds(&[], 0.1).is_err());
        assert!(auc_adds(&[0.1], 0.0).is_err());
        assert!(auc_adds(&[-0.1], 0.1).is_err());
    }

    #[test]
    fn threshold_table_cases() {
        let t = threshold_table(&[0.03, 0.07, 0.15, 0.25], &DEFAULT_TRANSLATION_THRESHOLDS).unwrap();
        assert_eq!(t, vec![25.0, 50.0, 75.0, 100.0]);
        let t = threshold_table(&[0.0; 3], &DEFAULT_TRANSLATION_THRESHOLDS).unwrap();
        assert_eq!(t, vec![100.0; 4]);
        assert!(threshold_table(&[], &[1.0]).is_err());
        assert!(threshold_table(&[1.0], &[2.0, 1.0]).is_err());
        // strict inequality at the threshold
        assert_eq!(threshold_table(&[0.05], &[0.05]).unwrap(), vec![0.0]);
    }

    #[test]
    fn translation_from_roi_offset() {
        let k = FisheyeIntrinsics::centered(400.0, 1200, 1000).unwrap();
        let roi = RoiBox::new(550.0, 450.0, 650.0, 550.0).unwrap();
        let t = recover_translation((0.0, 0.0), 2.0, &roi, &k).unwrap();
        assert_eq!(t, Vec3::new(0.0, 0.0, 2.0));
        assert!(matches!(
            recover_translation((1.5, 0.0), 2.0, &roi, &k),
            Err(Error::InvalidInput(_))
        ));
        assert!(recover_translation((0.0, 0.0), 0.0, &roi, &k).is_err());
        assert_eq!(encode_center_offset(650.0, 475.0, &roi), (1.0, -0.5));
    }
}
