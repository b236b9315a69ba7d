//! Sampling-grid construction and bilinear remapping.
//!
//! Two grid flavors are provided: a virtual perspective view around a tangent
//! point ([`build_perspective_grid`]) and an ROI feature-map projection onto
//! the plane tangent at the ROI center ([`build_roi_feature_grid`]). Grids are
//! immutable once built and can be cached on disk ([`save_grid`]).

mod cache;
mod grid;
mod image;

use rayon::prelude::*;

pub use self::cache::{decode_grid, encode_grid, load_grid, save_grid, GRID_MAGIC, GRID_VERSION};
pub(crate) use self::grid::run_in_pool;
pub use self::grid::{
    build_perspective_grid, build_roi_feature_grid, PerspectiveMapping, RoiBox, RoiFeatureGrid,
    RoiFeatureMapping, SampleGrid, VirtualCamera,
};
pub use self::image::{downsample, load_png, save_png, ImageBuffer, Sample};

use crate::error::{Error, Result};

/// `floor` without a libm call on targets lacking a rounding instruction.
#[inline]
fn floor_i64(x: f32) -> i64 {
    let t = x as i64;
    t - ((t as f32) > x) as i64
}

/// Bilinear sample at continuous position `(u, v)`; pixel `(i, j)` is centered
/// at `(i + 0.5, j + 0.5)` and indices clamp at the border. `out.len()` is the
/// channel count; `C` fixes it at compile time when nonzero.
#[inline(always)]
fn bilinear<T: Sample, const C: usize>(src: &ImageBuffer<T>, u: f32, v: f32, out: &mut [T]) {
    let w = src.width() as i64;
    let h = src.height() as i64;
    let c = if C == 0 { out.len() } else { C };
    let x = u - 0.5;
    let y = v - 0.5;
    let xi = floor_i64(x);
    let yi = floor_i64(y);
    let fx = x - xi as f32;
    let fy = y - yi as f32;
    let stride = w as usize * c;
    let data = src.data();
    let (top, bottom): (&[T], &[T]) = if xi >= 0 && yi >= 0 && xi + 1 < w && yi + 1 < h {
        // interior: both neighbours of each row are adjacent in memory
        let i = yi as usize * stride + xi as usize * c;
        (&data[i..i + 2 * c], &data[i + stride..i + stride + 2 * c])
    } else {
        return bilinear_clamped(data, w, h, c, xi, yi, fx, fy, out);
    };
    T::blend(top, bottom, fx, fy, &mut out[..c]);
}

#[allow(clippy::too_many_arguments)]
#[cold]
fn bilinear_clamped<T: Sample>(
    data: &[T],
    w: i64,
    h: i64,
    c: usize,
    xi: i64,
    yi: i64,
    fx: f32,
    fy: f32,
    out: &mut [T],
) {
    let x0 = xi.clamp(0, w - 1) as usize * c;
    let x1 = (xi + 1).clamp(0, w - 1) as usize * c;
    let y0 = yi.clamp(0, h - 1) as usize;
    let y1 = (yi + 1).clamp(0, h - 1) as usize;
    let stride = w as usize * c;
    let (r0, r1) = (y0 * stride, y1 * stride);
    let gather = |row: usize| -> Vec<T> {
        let mut px = data[row + x0..row + x0 + c].to_vec();
        px.extend_from_slice(&data[row + x1..row + x1 + c]);
        px
    };
    T::blend(&gather(r0), &gather(r1), fx, fy, out);
}

fn remap_row_with<T: Sample, const C: usize>(
    src: &ImageBuffer<T>,
    grid: &SampleGrid,
    y: usize,
    fill: T,
    row: &mut [T],
) {
    let c = src.channels() as usize;
    let base = y * grid.width as usize;
    let end = base + grid.width as usize;
    let entries = grid.src_u[base..end]
        .iter()
        .zip(&grid.src_v[base..end])
        .zip(&grid.valid[base..end]);
    for (px, ((&u, &v), &valid)) in row.chunks_exact_mut(c).zip(entries) {
        if valid {
            bilinear::<T, C>(src, u, v, px);
        } else {
            px.fill(fill);
        }
    }
}

fn remap_row<T: Sample>(src: &ImageBuffer<T>, grid: &SampleGrid, y: usize, fill: T, row: &mut [T]) {
    match src.channels() {
        1 => remap_row_with::<T, 1>(src, grid, y, fill, row),
        3 => remap_row_with::<T, 3>(src, grid, y, fill, row),
        4 => remap_row_with::<T, 4>(src, grid, y, fill, row),
        _ => remap_row_with::<T, 0>(src, grid, y, fill, row),
    }
}

/// Resamples `src` through `grid`. Invalid grid entries receive `fill` in
/// every channel. The output does not depend on `workers`.
pub fn remap_image<T: Sample>(
    src: &ImageBuffer<T>,
    grid: &SampleGrid,
    fill: T,
    workers: usize,
) -> Result<ImageBuffer<T>> {
    if workers == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    if let Some((w, h)) = grid.source_dims {
        if (w, h) != (src.width(), src.height()) {
            return Err(Error::invalid(format!(
                "grid was built for a {w}x{h} source, got {}x{}",
                src.width(),
                src.height()
            )));
        }
    }
    if src.width() == 0 || src.height() == 0 {
        return Err(Error::invalid("source image is empty"));
    }
    let c = src.channels();
    let mut out = ImageBuffer::filled(grid.width, grid.height, c, fill);
    let row_len = grid.width as usize * c as usize;
    if row_len == 0 {
        return Ok(out);
    }
    let rows = out.data_mut().chunks_mut(row_len).enumerate();
    if workers == 1 {
        rows.for_each(|(y, row)| remap_row(src, grid, y, fill, row));
    } else {
        let rows: Vec<_> = rows.collect();
        run_in_pool(workers, || {
            rows.into_par_iter()
                .for_each(|(y, row)| remap_row(src, grid, y, fill, row))
        });
    }
    Ok(out)
}

/// Validity mask of a grid: 255 where sampled, 0 where filled.
pub fn validity_mask(grid: &SampleGrid) -> ImageBuffer<u8> {
    let data = grid.valid.iter().map(|&v| if v { 255 } else { 0 }).collect();
    ImageBuffer::from_vec(grid.width, grid.height, 1, data).expect("mask dims")
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::fisheye::FisheyeIntrinsics;
    use crate::sphere::{spherical_to_pixel, TangentPoint};

    fn fisheye() -> FisheyeIntrinsics {
        FisheyeIntrinsics::centered(380.0, 1224, 1024).unwrap()
    }

    fn gradient(w: u32, h: u32, c: u32) -> ImageBuffer<f32> {
        let data = (0..w * h * c)
            .map(|i| ((i * 37) % 251) as f32 + 0.25 * (i % 3) as f32)
            .collect();
        ImageBuffer::from_vec(w, h, c, data).unwrap()
    }

    #[test]
    fn identity_grid_copies_exactly() {
        let data: Vec<u8> = (0..(17 * 9 * 3)).map(|i| (i * 7 % 256) as u8).collect();
        let src = ImageBuffer::from_vec(17, 9, 3, data).unwrap();
        let out = remap_image(&src, &SampleGrid::identity(17, 9), 0, 1).unwrap();
        assert_eq!(out, src);
        let f = gradient(13, 11, 1);
        assert_eq!(remap_image(&f, &SampleGrid::identity(13, 11), 0.0, 3).unwrap(), f);
    }

    #[test]
    fn constant_source_stays_constant() {
        let k = fisheye();
        let src = ImageBuffer::filled(k.width, k.height, 1, 77u8);
        let grid = build_perspective_grid(
            &TangentPoint::from_degrees(20.0, -50.0),
            &VirtualCamera::default(),
            &k,
            2,
        )
        .unwrap();
        let out = remap_image(&src, &grid, 0, 1).unwrap();
        for (v, &ok) in out.data().iter().zip(&grid.valid) {
            assert_eq!(*v, if ok { 77 } else { 0 });
        }
    }

    #[test]
    fn remap_is_intensity_linear() {
        let k = fisheye();
        let src = gradient(k.width, k.height, 2);
        let scaled = src.map(|v| 2.5 * v);
        let grid = build_perspective_grid(
            &TangentPoint::from_degrees(-10.0, 30.0),
            &VirtualCamera::new(64, 48, 60.0).unwrap(),
            &k,
            1,
        )
        .unwrap();
        let a = remap_image(&src, &grid, 0.0, 1).unwrap();
        let b = remap_image(&scaled, &grid, 0.0, 1).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((2.5 * x - y).abs() <= 1e-6 * y.abs().max(1.0), "{x} {y}");
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let k = fisheye();
        let src = gradient(k.width, k.height, 3).to_u8();
        let t0 = TangentPoint::from_degrees(35.0, 60.0);
        let g1 = build_perspective_grid(&t0, &VirtualCamera::default(), &k, 1).unwrap();
        let g4 = build_perspective_grid(&t0, &VirtualCamera::default(), &k, 4).unwrap();
        assert_eq!(encode_grid(&g1), encode_grid(&g4));
        let a = remap_image(&src, &g1, 9, 1).unwrap();
        let b = remap_image(&src, &g1, 9, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_source_is_rejected() {
        let k = fisheye();
        let grid =
            build_perspective_grid(&TangentPoint::new(0.0, 0.0), &VirtualCamera::default(), &k, 1).unwrap();
        let wrong = ImageBuffer::filled(100, 100, 1, 0u8);
        assert!(matches!(
            remap_image(&wrong, &grid, 0, 1),
            Err(Error::InvalidInput(_))
        ));
        let right = ImageBuffer::filled(k.width, k.height, 1, 0u8);
        assert!(matches!(
            remap_image(&right, &grid, 0, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn perspective_center_samples_tangent_point() {
        let k = fisheye();
        let t0 = TangentPoint::from_degrees(25.0, -40.0);
        let vcam = VirtualCamera::default();
        let map = PerspectiveMapping::new(t0, vcam, &k).unwrap();
        let (u, v) = map.source_at(200.0, 200.0).unwrap();
        let (eu, ev) = spherical_to_pixel(&t0.as_spherical(), &k).unwrap();
        assert_abs_diff_eq!(u, eu, epsilon = 1e-6);
        assert_abs_diff_eq!(v, ev, epsilon = 1e-6);

        // odd-sized view has a pixel whose center is the tangent point
        let odd = VirtualCamera::new(401, 401, 350.0).unwrap();
        let grid = build_perspective_grid(&t0, &odd, &k, 1).unwrap();
        let (gu, gv) = grid.entry(200, 200).unwrap();
        assert_abs_diff_eq!(gu as f64, eu, epsilon = 1e-3);
        assert_abs_diff_eq!(gv as f64, ev, epsilon = 1e-3);
    }

    #[test]
    fn on_axis_view_is_pinhole_undistortion() {
        let k = fisheye();
        let vcam = VirtualCamera::new(120, 90, 100.0).unwrap();
        let map = PerspectiveMapping::new(TangentPoint::new(0.0, 0.0), vcam, &k).unwrap();
        for j in 0..vcam.height {
            for i in 0..vcam.width {
                let (u, v) = (i as f64 + 0.5, j as f64 + 0.5);
                // oracle: pinhole ray (x, y, 1) straight into r = f·θ
                let x = (u - 60.0) / 100.0;
                let y = (v - 45.0) / 100.0;
                let lateral = x.hypot(y);
                let r = k.f * lateral.atan2(1.0);
                let (eu, ev) = if lateral == 0.0 {
                    (k.cx, k.cy)
                } else {
                    (k.cx + r * x / lateral, k.cy + r * y / lateral)
                };
                let (su, sv) = map.source_at(u, v).unwrap();
                assert_abs_diff_eq!(su, eu, epsilon = 1e-9);
                assert_abs_diff_eq!(sv, ev, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn default_view_half_diagonal_fov() {
        let vcam = VirtualCamera::default();
        let expected = (2f64.sqrt() * 200.0 / 350.0).atan();
        assert_abs_diff_eq!(vcam.half_diagonal_fov(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected.to_degrees(), 38.94, epsilon = 5e-3);

        // the corner pixel ray of the default view sits at that angle from t0
        let k = fisheye();
        let t0 = TangentPoint::from_degrees(10.0, 20.0);
        let map = PerspectiveMapping::new(t0, vcam, &k).unwrap();
        let (u, v) = map.source_at(0.0, 0.0).unwrap();
        let ray = crate::fisheye::pixel_to_ray(u, v, &k).unwrap();
        let angle = ray.dot(&t0.ray()).clamp(-1.0, 1.0).acos();
        assert_abs_diff_eq!(angle, expected, epsilon = 1e-9);
    }

    #[test]
    fn out_of_fov_tangent_is_rejected() {
        let k = fisheye();
        let err = PerspectiveMapping::new(TangentPoint::new(0.0, PI), VirtualCamera::default(), &k);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn grid_cells_outside_fov_are_invalid() {
        let k = fisheye();
        let t0 = TangentPoint::from_degrees(0.0, 80.0);
        let grid = build_perspective_grid(&t0, &VirtualCamera::default(), &k, 1).unwrap();
        let valid = grid.valid_count();
        assert!(valid > 0 && valid < grid.len());
        let mask = validity_mask(&grid);
        assert_eq!(mask.data().iter().filter(|&&m| m == 255).count(), valid);
    }

    #[test]
    fn roi_feature_grid_at_principal_point() {
        let k = fisheye();
        let roi = RoiBox::new(k.cx - 60.0, k.cy - 40.0, k.cx + 60.0, k.cy + 40.0).unwrap();
        let map = RoiFeatureMapping::new(&roi, 1, &k).unwrap();
        assert_eq!((map.grid_width, map.grid_height), (120, 80));
        assert_abs_diff_eq!(map.tangent.theta0, 0.0);
        assert_abs_diff_eq!(map.tangent.phi0, 0.0);
        let (u, v) = map.source_at(60.0, 40.0).unwrap();
        assert_abs_diff_eq!(u, k.cx, epsilon = 1e-6);
        assert_abs_diff_eq!(v, k.cy, epsilon = 1e-6);

        let built = build_roi_feature_grid(&roi, 1, &k, 1).unwrap();
        assert!(built.f_equiv > 0.0);
        assert_eq!(built.grid.valid_count(), built.grid.len());
    }

    #[test]
    fn roi_grid_dims_round_up() {
        let k = fisheye();
        let roi = RoiBox::new(300.0, 200.0, 401.0, 250.5).unwrap();
        let map = RoiFeatureMapping::new(&roi, 8, &k).unwrap();
        assert_eq!((map.grid_width, map.grid_height), (13, 7));
        assert!(RoiFeatureMapping::new(&roi, 0, &k).is_err());
    }

    #[test]
    fn roi_outside_fov_is_rejected() {
        let k = FisheyeIntrinsics::new(100.0, 600.0, 500.0, 1224, 1024, 2.0).unwrap();
        let roi = RoiBox::new(1000.0, 900.0, 1100.0, 1000.0).unwrap();
        assert!(matches!(
            RoiFeatureMapping::new(&roi, 1, &k),
            Err(Error::InvalidInput(_))
        ));
    }
}
