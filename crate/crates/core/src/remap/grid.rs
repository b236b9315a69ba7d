//! Sampling grids: per-output-pixel source coordinates on the fisheye image.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fisheye::FisheyeIntrinsics;
use crate::geometry::Vec3;
use crate::sphere::{
    gnomonic_forward, gnomonic_inverse, pixel_to_spherical, spherical_to_pixel, TangentPlaneCoord,
    TangentPoint,
};

/// Pinhole camera looking along the tangent-point ray, principal point at the image center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirtualCamera {
    pub width: u32,
    pub height: u32,
    pub f_p: f64,
}

impl Default for VirtualCamera {
    fn default() -> Self {
        Self {
            width: 400,
            height: 400,
            f_p: 350.0,
        }
    }
}

impl VirtualCamera {
    pub fn new(width: u32, height: u32, f_p: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("virtual camera dimensions must be positive"));
        }
        if !(f_p.is_finite() && f_p > 0.0) {
            return Err(Error::invalid("virtual focal length must be positive"));
        }
        Ok(Self { width, height, f_p })
    }

    /// Continuous pixel position of a tangent-plane point.
    pub fn to_pixel(&self, p: &TangentPlaneCoord) -> (f64, f64) {
        (
            p.x * self.f_p + 0.5 * self.width as f64,
            p.y * self.f_p + 0.5 * self.height as f64,
        )
    }

    pub fn to_plane(&self, u: f64, v: f64) -> TangentPlaneCoord {
        TangentPlaneCoord {
            x: (u - 0.5 * self.width as f64) / self.f_p,
            y: (v - 0.5 * self.height as f64) / self.f_p,
        }
    }

    /// Pinhole projection of a point in virtual-camera coordinates.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        if !(p.z > 0.0) {
            return None;
        }
        Some(self.to_pixel(&TangentPlaneCoord {
            x: p.x / p.z,
            y: p.y / p.z,
        }))
    }

    /// Half-diagonal field of view in radians.
    pub fn half_diagonal_fov(&self) -> f64 {
        let half_diag = 0.5 * (self.width as f64).hypot(self.height as f64);
        (half_diag / self.f_p).atan()
    }
}

/// Per-output-pixel source coordinates. Invalid entries carry no numeric guarantee.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    pub width: u32,
    pub height: u32,
    pub src_u: Vec<f32>,
    pub src_v: Vec<f32>,
    pub valid: Vec<bool>,
    /// Source image size the grid was built for, when known.
    pub source_dims: Option<(u32, u32)>,
}

impl SampleGrid {
    pub fn new(width: u32, height: u32, src_u: Vec<f32>, src_v: Vec<f32>, valid: Vec<bool>) -> Result<Self> {
        let n = width as usize * height as usize;
        if src_u.len() != n || src_v.len() != n || valid.len() != n {
            return Err(Error::invalid(format!(
                "grid arrays must hold {width}x{height} entries"
            )));
        }
        Ok(Self {
            width,
            height,
            src_u,
            src_v,
            valid,
            source_dims: None,
        })
    }

    /// Grid sampling each output pixel at its own center.
    pub fn identity(width: u32, height: u32) -> Self {
        let mut grid = Self::evaluate(width, height, 1, |u, v| Some((u, v)));
        grid.source_dims = Some((width, height));
        grid
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    #[inline]
    pub fn entry(&self, x: u32, y: u32) -> Option<(f32, f32)> {
        let i = y as usize * self.width as usize + x as usize;
        self.valid[i].then(|| (self.src_u[i], self.src_v[i]))
    }

    /// Fills a grid from `f(u, v)` evaluated at every output pixel center,
    /// parallel over rows. Output is independent of `workers`.
    pub fn evaluate<F>(width: u32, height: u32, workers: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> Option<(f64, f64)> + Sync,
    {
        let w = width as usize;
        let n = w * height as usize;
        let mut src_u = vec![0f32; n];
        let mut src_v = vec![0f32; n];
        let mut valid = vec![false; n];
        let fill_row = |y: usize, us: &mut [f32], vs: &mut [f32], ok: &mut [bool]| {
            let vc = y as f64 + 0.5;
            for x in 0..w {
                if let Some((su, sv)) = f(x as f64 + 0.5, vc) {
                    us[x] = su as f32;
                    vs[x] = sv as f32;
                    ok[x] = true;
                }
            }
        };
        if w > 0 {
            let rows = src_u
                .chunks_mut(w)
                .zip(src_v.chunks_mut(w))
                .zip(valid.chunks_mut(w))
                .enumerate();
            if workers <= 1 {
                rows.for_each(|(y, ((us, vs), ok))| fill_row(y, us, vs, ok));
            } else {
                let rows: Vec<_> = rows.collect();
                run_in_pool(workers, || {
                    rows.into_par_iter()
                        .for_each(|(y, ((us, vs), ok))| fill_row(y, us, vs, ok))
                });
            }
        }
        Self {
            width,
            height,
            src_u,
            src_v,
            valid,
            source_dims: None,
        }
    }
}

pub(crate) fn run_in_pool<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(op),
        // fall back to the global pool; results do not depend on the thread count
        Err(_) => op(),
    }
}

/// Output pixel → fisheye pixel map of a virtual perspective view.
#[derive(Clone, Copy, Debug)]
pub struct PerspectiveMapping {
    pub tangent: TangentPoint,
    pub vcam: VirtualCamera,
    intrinsics: FisheyeIntrinsics,
}

impl PerspectiveMapping {
    pub fn new(t0: TangentPoint, vcam: VirtualCamera, k: &FisheyeIntrinsics) -> Result<Self> {
        let ray = t0.ray();
        let incidence = ray.x.hypot(ray.y).atan2(ray.z);
        if !(incidence <= k.half_fov()) {
            return Err(Error::invalid(format!(
                "tangent point ({}, {}) lies outside the fisheye field of view",
                t0.theta0, t0.phi0
            )));
        }
        Ok(Self {
            tangent: t0,
            vcam,
            intrinsics: k.with_usable_fov(),
        })
    }

    /// Fisheye position sampled at continuous output position `(u, v)`.
    pub fn source_at(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        let s = gnomonic_inverse(&self.vcam.to_plane(u, v), &self.tangent).ok()?;
        let (su, sv) = spherical_to_pixel(&s, &self.intrinsics).ok()?;
        self.intrinsics.in_bounds(su, sv).then_some((su, sv))
    }

    pub fn build(&self, workers: usize) -> SampleGrid {
        let mut grid = SampleGrid::evaluate(self.vcam.width, self.vcam.height, workers, |u, v| {
            self.source_at(u, v)
        });
        grid.source_dims = Some((self.intrinsics.width, self.intrinsics.height));
        grid
    }
}

/// Grid for a virtual perspective view centered on `t0`.
pub fn build_perspective_grid(
    t0: &TangentPoint,
    vcam: &VirtualCamera,
    k: &FisheyeIntrinsics,
    workers: usize,
) -> Result<SampleGrid> {
    Ok(PerspectiveMapping::new(*t0, *vcam, k)?.build(workers))
}

/// Axis-aligned region of interest on the fisheye image, in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoiBox {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl RoiBox {
    pub fn new(u_min: f64, v_min: f64, u_max: f64, v_max: f64) -> Result<Self> {
        let finite = [u_min, v_min, u_max, v_max].iter().all(|c| c.is_finite());
        if !finite || !(u_min < u_max) || !(v_min < v_max) {
            return Err(Error::invalid(format!(
                "degenerate ROI [{u_min}, {u_max}] x [{v_min}, {v_max}]"
            )));
        }
        Ok(Self {
            u_min,
            v_min,
            u_max,
            v_max,
        })
    }

    /// From COCO-style `x, y, w, h`.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(x, y, x + w, y + h)
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }
    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }
    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.u_min + self.u_max), 0.5 * (self.v_min + self.v_max))
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u_min && u <= self.u_max && v >= self.v_min && v <= self.v_max
    }

    pub fn contains_box(&self, other: &RoiBox) -> bool {
        other.u_min >= self.u_min
            && other.u_max <= self.u_max
            && other.v_min >= self.v_min
            && other.v_max <= self.v_max
    }

    pub fn inflated(&self, margin: f64) -> RoiBox {
        RoiBox {
            u_min: self.u_min - margin,
            v_min: self.v_min - margin,
            u_max: self.u_max + margin,
            v_max: self.v_max + margin,
        }
    }

    /// Corners in order top-left, top-right, bottom-right, bottom-left.
    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.u_min, self.v_min),
            (self.u_max, self.v_min),
            (self.u_max, self.v_max),
            (self.u_min, self.v_max),
        ]
    }
}

/// Projective map from the unit square onto a quadrilateral (corner order as
/// [`RoiBox::corners`]).
#[derive(Clone, Copy, Debug, PartialEq)]
struct SquareToQuad {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    f: f64,
    g: f64,
    h: f64,
}

impl SquareToQuad {
    fn new(q: &[TangentPlaneCoord; 4]) -> Result<Self> {
        let sx = q[0].x - q[1].x + q[2].x - q[3].x;
        let sy = q[0].y - q[1].y + q[2].y - q[3].y;
        if sx == 0.0 && sy == 0.0 {
            return Ok(Self {
                a: q[1].x - q[0].x,
                b: q[3].x - q[0].x,
                c: q[0].x,
                d: q[1].y - q[0].y,
                e: q[3].y - q[0].y,
                f: q[0].y,
                g: 0.0,
                h: 0.0,
            });
        }
        let dx1 = q[1].x - q[2].x;
        let dx2 = q[3].x - q[2].x;
        let dy1 = q[1].y - q[2].y;
        let dy2 = q[3].y - q[2].y;
        let den = dx1 * dy2 - dx2 * dy1;
        if den.abs() < 1e-300 || !den.is_finite() {
            return Err(Error::invalid(
                "ROI corners project to a degenerate quadrilateral",
            ));
        }
        let g = (sx * dy2 - dx2 * sy) / den;
        let h = (dx1 * sy - sx * dy1) / den;
        Ok(Self {
            a: q[1].x - q[0].x + g * q[1].x,
            b: q[3].x - q[0].x + h * q[3].x,
            c: q[0].x,
            d: q[1].y - q[0].y + g * q[1].y,
            e: q[3].y - q[0].y + h * q[3].y,
            f: q[0].y,
            g,
            h,
        })
    }

    fn apply(&self, s: f64, t: f64) -> TangentPlaneCoord {
        let w = self.g * s + self.h * t + 1.0;
        TangentPlaneCoord {
            x: (self.a * s + self.b * t + self.c) / w,
            y: (self.d * s + self.e * t + self.f) / w,
        }
    }

    /// `|det ∂(x, y)/∂(s, t)|` at `(s, t)`.
    fn jacobian_det(&self, s: f64, t: f64) -> f64 {
        let w = self.g * s + self.h * t + 1.0;
        let p = self.apply(s, t);
        let dxs = (self.a - self.g * p.x) / w;
        let dxt = (self.b - self.h * p.x) / w;
        let dys = (self.d - self.g * p.y) / w;
        let dyt = (self.e - self.h * p.y) / w;
        (dxs * dyt - dxt * dys).abs()
    }
}

/// Feature-map grid mapping an ROI onto the plane tangent at its center.
///
/// The four ROI corners are projected to the tangent plane and the output
/// grid is the perspective (homography) view whose corners are exactly those
/// projected corners, so straight lines on the tangent plane stay straight
/// and every grid sample lies within the ROI footprint.
#[derive(Clone, Copy, Debug)]
pub struct RoiFeatureMapping {
    pub roi: RoiBox,
    pub stride: u32,
    pub tangent: TangentPoint,
    pub corners: [TangentPlaneCoord; 4],
    pub grid_width: u32,
    pub grid_height: u32,
    quad: SquareToQuad,
    intrinsics: FisheyeIntrinsics,
}

impl RoiFeatureMapping {
    pub fn new(roi: &RoiBox, stride: u32, k: &FisheyeIntrinsics) -> Result<Self> {
        if stride == 0 {
            return Err(Error::invalid("stride must be at least 1"));
        }
        let k = k.with_usable_fov();
        let limit = k.f * k.half_fov();
        let nearest_u = k.cx.clamp(roi.u_min, roi.u_max);
        let nearest_v = k.cy.clamp(roi.v_min, roi.v_max);
        if (nearest_u - k.cx).hypot(nearest_v - k.cy) > limit {
            return Err(Error::invalid("ROI lies entirely outside the field of view"));
        }
        let clamp = |u: f64, v: f64| {
            let (x, y) = (u - k.cx, v - k.cy);
            let r = x.hypot(y);
            if r > limit {
                let s = limit / r * (1.0 - 1e-12);
                (k.cx + x * s, k.cy + y * s)
            } else {
                (u, v)
            }
        };
        let (cu, cv) = roi.center();
        let (cu, cv) = clamp(cu, cv);
        let tangent: TangentPoint = pixel_to_spherical(cu, cv, &k)?.into();
        let mut corners = [TangentPlaneCoord { x: 0.0, y: 0.0 }; 4];
        for (dst, (u, v)) in corners.iter_mut().zip(roi.corners()) {
            let (u, v) = clamp(u, v);
            let s = pixel_to_spherical(u, v, &k)?;
            *dst = gnomonic_forward(&s, &tangent)
                .map_err(|_| Error::invalid("ROI spans more than a hemisphere around its center"))?;
        }
        let quad = SquareToQuad::new(&corners)?;
        let grid_width = (roi.width() / stride as f64).ceil().max(1.0) as u32;
        let grid_height = (roi.height() / stride as f64).ceil().max(1.0) as u32;
        Ok(Self {
            roi: *roi,
            stride,
            tangent,
            corners,
            grid_width,
            grid_height,
            quad,
            intrinsics: k,
        })
    }

    /// Tangent-plane point at normalized grid position `(s, t) ∈ [0, 1]²`.
    pub fn plane_at(&self, s: f64, t: f64) -> TangentPlaneCoord {
        self.quad.apply(s, t)
    }

    /// Fisheye pixel (not divided by stride) at normalized grid position.
    pub fn fisheye_at(&self, s: f64, t: f64) -> Option<(f64, f64)> {
        let sph = gnomonic_inverse(&self.plane_at(s, t), &self.tangent).ok()?;
        let (u, v) = spherical_to_pixel(&sph, &self.intrinsics).ok()?;
        self.intrinsics.in_bounds(u, v).then_some((u, v))
    }

    /// Feature-map coordinates (fisheye pixel / stride) at a continuous grid position.
    pub fn source_at(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        let stride = self.stride as f64;
        self.fisheye_at(u / self.grid_width as f64, v / self.grid_height as f64)
            .map(|(x, y)| (x / stride, y / stride))
    }

    /// Grid pixels per tangent-plane unit at the grid center (geometric mean of both axes).
    pub fn equivalent_focal(&self) -> f64 {
        let det = self.quad.jacobian_det(0.5, 0.5);
        (self.grid_width as f64 * self.grid_height as f64 / det).sqrt()
    }

    pub fn build(&self, workers: usize) -> SampleGrid {
        let mut grid = SampleGrid::evaluate(self.grid_width, self.grid_height, workers, |u, v| {
            self.source_at(u, v)
        });
        let stride = self.stride;
        grid.source_dims = Some((
            self.intrinsics.width.div_ceil(stride),
            self.intrinsics.height.div_ceil(stride),
        ));
        grid
    }
}

/// Result of [`build_roi_feature_grid`].
#[derive(Clone, Debug)]
pub struct RoiFeatureGrid {
    pub grid: SampleGrid,
    pub tangent: TangentPoint,
    pub f_equiv: f64,
}

pub fn build_roi_feature_grid(
    roi: &RoiBox,
    stride: u32,
    k: &FisheyeIntrinsics,
    workers: usize,
) -> Result<RoiFeatureGrid> {
    let mapping = RoiFeatureMapping::new(roi, stride, k)?;
    Ok(RoiFeatureGrid {
        grid: mapping.build(workers),
        tangent: mapping.tangent,
        f_equiv: mapping.equivalent_focal(),
    })
}
