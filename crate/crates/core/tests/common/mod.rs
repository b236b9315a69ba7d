//! Shared helpers for integration tests: independent projection oracles and
//! a straight-edge check for remapped checkerboard renders.

#![allow(dead_code)]

use fishpose::geometry::{Pose6D, RotationMatrix, Vec3};
use fishpose::{FisheyeIntrinsics, ImageBuffer, VirtualCamera};

/// Equidistant projection written out from scratch: incidence from the dot
/// product with the optical axis, azimuth from the x/y components.
pub fn oracle_project(p: &Vec3, k: &FisheyeIntrinsics) -> (f64, f64) {
    let n = p.norm();
    let incidence = (p.z / n).clamp(-1.0, 1.0).acos();
    let rho = p.x.hypot(p.y);
    if rho == 0.0 {
        return (k.cx, k.cy);
    }
    (
        k.cx + k.f * incidence * p.x / rho,
        k.cy + k.f * incidence * p.y / rho,
    )
}

/// Virtual camera axes for a viewing direction `n`, built from cross products:
/// `X ∝ ŷ × n`, `Y = n × X`.
pub fn oracle_axes(n: &Vec3) -> (Vec3, Vec3, Vec3) {
    let n = n.normalize();
    let x = Vec3::y().cross(&n).normalize();
    let y = n.cross(&x);
    (x, y, n)
}

/// Tangent-plane coordinates by intersecting the ray `p` with the plane
/// `n · q = 1` and expressing the hit point in the plane axes.
pub fn oracle_tangent_plane(p: &Vec3, n: &Vec3) -> Option<(f64, f64)> {
    let (x, y, n) = oracle_axes(n);
    let d = n.dot(p);
    if d <= 0.0 {
        return None;
    }
    let q = p / d;
    Some((x.dot(&q), y.dot(&q)))
}

/// Bilinear sample of channel 0 with pixel centers at half-integers.
pub fn sample(img: &ImageBuffer<f32>, u: f64, v: f64) -> Option<f64> {
    let x = u - 0.5;
    let y = v - 0.5;
    if x < 0.0 || y < 0.0 || x > (img.width() - 1) as f64 || y > (img.height() - 1) as f64 {
        return None;
    }
    let (x0, y0) = (x.floor() as u32, y.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(img.width() - 1), (y0 + 1).min(img.height() - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let g = |a: u32, b: u32| img.get(a, b, 0) as f64;
    let top = g(x0, y0) * (1.0 - fx) + g(x1, y0) * fx;
    let bot = g(x0, y1) * (1.0 - fx) + g(x1, y1) * fx;
    Some(top * (1.0 - fy) + bot * fy)
}

/// Checkerboard ground plane seen by a virtual camera.
pub struct CheckerView {
    pub vcam: VirtualCamera,
    /// Global (fisheye camera) frame to virtual camera frame.
    pub r_adj: RotationMatrix,
    /// Fisheye camera pose in the world.
    pub camera: Pose6D,
    pub plane_y: f64,
    pub cell: f64,
    pub mid: f64,
}

#[derive(Debug, Default)]
pub struct EdgeReport {
    pub lines: usize,
    pub points: usize,
    /// Largest perpendicular distance of a measured edge point from the
    /// straight line fitted to its edge.
    pub max_residual: f64,
    /// Largest distance between a measured edge point and the predicted
    /// pinhole projection of the 3D edge.
    pub max_offset: f64,
}

impl CheckerView {
    fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        let local = self.camera.inverse().transform_point(p);
        self.vcam.project(&self.r_adj.apply(&local))
    }

    fn inside(&self, (u, v): (f64, f64), margin: f64) -> bool {
        u > margin
            && v > margin
            && u < self.vcam.width as f64 - margin
            && v < self.vcam.height as f64 - margin
    }

    /// Measures edge points on every checker edge (both families) by locating
    /// the mid-level crossing along short profiles normal to the predicted
    /// edge, fits a line per edge and reports the worst residual.
    pub fn measure(&self, img: &ImageBuffer<f32>) -> EdgeReport {
        let mut report = EdgeReport::default();
        let c = self.cell;
        for family in 0..2 {
            for i in -40i32..=40 {
                let mut pts = Vec::new();
                let mut offsets = Vec::new();
                let steps = 4000;
                for s in 0..steps {
                    let along = -10.0 + 20.0 * s as f64 / steps as f64;
                    let frac = (along / c).rem_euclid(1.0);
                    if !(0.2..=0.8).contains(&frac) {
                        continue;
                    }
                    let (dir, perp) = if family == 0 {
                        (Vec3::z(), Vec3::x())
                    } else {
                        (Vec3::x(), Vec3::z())
                    };
                    let base = perp * (i as f64 * c) + Vec3::new(0.0, self.plane_y, 0.0);
                    let p3 = base + dir * along;
                    let Some(p) = self.project(&p3) else { continue };
                    if !self.inside(p, 8.0) {
                        continue;
                    }
                    let (Some(a), Some(b)) =
                        (self.project(&(p3 + dir * 1e-3)), self.project(&(p3 - dir * 1e-3)))
                    else {
                        continue;
                    };
                    // neighbouring edges must be far enough that the profile sees one crossing
                    let (Some(l), Some(r)) = (
                        self.project(&(p3 + perp * 0.5 * c)),
                        self.project(&(p3 - perp * 0.5 * c)),
                    ) else {
                        continue;
                    };
                    let dl = (l.0 - p.0).hypot(l.1 - p.1);
                    let dr = (r.0 - p.0).hypot(r.1 - p.1);
                    if dl.min(dr) < 6.0 {
                        continue;
                    }
                    let (tx, ty) = (a.0 - b.0, a.1 - b.1);
                    let tn = tx.hypot(ty);
                    let (nx, ny) = (-ty / tn, tx / tn);
                    let prof: Vec<(f64, f64)> = (-16..=16)
                        .filter_map(|k| {
                            let s = k as f64 * 0.25;
                            sample(img, p.0 + s * nx, p.1 + s * ny).map(|val| (s, val - self.mid))
                        })
                        .collect();
                    if prof.len() != 33 {
                        continue;
                    }
                    let crossings: Vec<f64> = prof
                        .windows(2)
                        .filter(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0))
                        .map(|w| w[0].0 + (w[1].0 - w[0].0) * w[0].1 / (w[0].1 - w[1].1))
                        .collect();
                    if crossings.len() != 1 {
                        continue;
                    }
                    let s = crossings[0];
                    let q = (p.0 + s * nx, p.1 + s * ny);
                    offsets.push(s.abs());
                    pts.push(q);
                }
                if pts.len() < 8 {
                    continue;
                }
                let res = line_fit_max_residual(&pts);
                report.lines += 1;
                report.points += pts.len();
                report.max_residual = report.max_residual.max(res);
                report.max_offset = offsets.iter().cloned().fold(report.max_offset, f64::max);
            }
        }
        report
    }
}

/// Total-least-squares line fit; returns the largest perpendicular residual.
pub fn line_fit_max_residual(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.0 - mx, p.1 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // direction of the major axis
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (nx, ny) = (-angle.sin(), angle.cos());
    pts.iter()
        .map(|p| ((p.0 - mx) * nx + (p.1 - my) * ny).abs())
        .fold(0.0, f64::max)
}
