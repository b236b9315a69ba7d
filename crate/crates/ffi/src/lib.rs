//! C ABI over `fishpose`.
//!
//! Every fallible function returns an [`FpStatus`]; on failure the message is
//! kept per thread and can be read with [`fp_last_error_message`]. Objects
//! are opaque handles released with their `_free` function. Angles are in
//! radians, quaternions are `[w, x, y, z]`, rotation matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use fishpose::fisheye::{pixel_to_ray, ray_to_pixel};
use fishpose::remap::{build_perspective_grid, build_roi_feature_grid, load_grid, remap_image, save_grid};
use fishpose::sphere::{gnomonic_forward, gnomonic_inverse, pixel_to_spherical, spherical_to_pixel};
use fishpose::viewpoint::{apparent_orientation, recover_global_orientation, rotation_adjust};
use fishpose::{
    Error, FisheyeIntrinsics, ImageBuffer, RoiBox, SampleGrid, SphericalCoord, TangentPlaneCoord,
    TangentPoint, UnitQuaternion, Vec3, VirtualCamera,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FpStatus {
    Ok = 0,
    InvalidInput = 1,
    OutOfFov = 2,
    BehindPlane = 3,
    NotVisible = 4,
    Format = 5,
    Config = 6,
    Io = 7,
    Image = 8,
    NullPointer = 9,
    Panic = 10,
}

/// Opaque fisheye intrinsics.
pub struct FpIntrinsics(FisheyeIntrinsics);

/// Opaque sampling grid.
pub struct FpGrid(SampleGrid);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> FpStatus {
    match e {
        Error::InvalidInput(_) => FpStatus::InvalidInput,
        Error::OutOfFov { .. } => FpStatus::OutOfFov,
        Error::BehindPlane { .. } => FpStatus::BehindPlane,
        Error::NotVisible => FpStatus::NotVisible,
        Error::Format(_) => FpStatus::Format,
        Error::Config(_) => FpStatus::Config,
        Error::Io { .. } => FpStatus::Io,
        Error::Image(_) => FpStatus::Image,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> FpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            FpStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed for `{name}`"));
            FpStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            FpStatus::Panic
        }
    }
}

unsafe fn arg<'a, T>(p: *const T, name: &'static str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn path_arg(p: *const c_char) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidInput("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn to_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in bytes
/// excluding the terminator; `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn fp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates equidistant fisheye intrinsics. `fov_max` is the full field of
/// view in radians.
///
/// # Safety
/// `out_handle` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fp_intrinsics_new(
    f: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
    fov_max: f64,
    out_handle: *mut *mut FpIntrinsics,
) -> FpStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let k = FisheyeIntrinsics::new(f, cx, cy, width, height, fov_max)?;
        *slot = to_handle(FpIntrinsics(k));
        Ok(())
    })
}

/// Loads intrinsics from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_handle` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fp_intrinsics_load(
    path: *const c_char,
    out_handle: *mut *mut FpIntrinsics,
) -> FpStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let k = FisheyeIntrinsics::load(path_arg(path)?)?;
        *slot = to_handle(FpIntrinsics(k));
        Ok(())
    })
}

/// # Safety
/// `k` must be null or a handle from `fp_intrinsics_new`/`fp_intrinsics_load`
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn fp_intrinsics_free(k: *mut FpIntrinsics) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Projects a camera-frame ray (need not be unit) to a fisheye pixel.
///
/// # Safety
/// `ray` must point to 3 doubles; `u`, `v` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fp_ray_to_pixel(
    k: *const FpIntrinsics,
    ray: *const f64,
    u: *mut f64,
    v: *mut f64,
) -> FpStatus {
    guard(|| {
        let k = &arg(k, "k")?.0;
        let r = std::slice::from_raw_parts(arg(ray, "ray")?, 3);
        let (pu, pv) = ray_to_pixel(&Vec3::new(r[0], r[1], r[2]), k)?;
        *out(u, "u")? = pu;
        *out(v, "v")? = pv;
        Ok(())
    })
}

/// Unit ray for a fisheye pixel, written to `ray[0..3]`.
///
/// # Safety
/// `ray` must be valid for 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn fp_pixel_to_ray(k: *const FpIntrinsics, u: f64, v: f64, ray: *mut f64) -> FpStatus {
    guard(|| {
        let k = &arg(k, "k")?.0;
        out(ray, "ray")?;
        let r = pixel_to_ray(u, v, k)?;
        std::slice::from_raw_parts_mut(ray, 3).copy_from_slice(r.as_slice());
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fp_pixel_to_spherical(
    k: *const FpIntrinsics,
    u: f64,
    v: f64,
    theta: *mut f64,
    phi: *mut f64,
) -> FpStatus {
    guard(|| {
        let k = &arg(k, "k")?.0;
        let s = pixel_to_spherical(u, v, k)?;
        *out(theta, "theta")? = s.theta;
        *out(phi, "phi")? = s.phi;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fp_spherical_to_pixel(
    k: *const FpIntrinsics,
    theta: f64,
    phi: f64,
    u: *mut f64,
    v: *mut f64,
) -> FpStatus {
    guard(|| {
        let k = &arg(k, "k")?.0;
        let (pu, pv) = spherical_to_pixel(&SphericalCoord::new(theta, phi), k)?;
        *out(u, "u")? = pu;
        *out(v, "v")? = pv;
        Ok(())
    })
}

/// Gnomonic projection of `(theta, phi)` about the tangent point `(theta0, phi0)`.
///
/// # Safety
/// `x`, `y` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fp_gnomonic_forward(
    theta: f64,
    phi: f64,
    theta0: f64,
    phi0: f64,
    x: *mut f64,
    y: *mut f64,
) -> FpStatus {
    guard(|| {
        let p = gnomonic_forward(&SphericalCoord::new(theta, phi), &TangentPoint::new(theta0, phi0))?;
        *out(x, "x")? = p.x;
        *out(y, "y")? = p.y;
        Ok(())
    })
}

/// # Safety
/// `theta`, `phi` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fp_gnomonic_inverse(
    x: f64,
    y: f64,
    theta0: f64,
    phi0: f64,
    theta: *mut f64,
    phi: *mut f64,
) -> FpStatus {
    guard(|| {
        let s = gnomonic_inverse(&TangentPlaneCoord { x, y }, &TangentPoint::new(theta0, phi0))?;
        *out(theta, "theta")? = s.theta;
        *out(phi, "phi")? = s.phi;
        Ok(())
    })
}

/// Writes `R_adj` for the tangent point, row-major, to `rows[0..9]`.
///
/// # Safety
/// `rows` must be valid for 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn fp_rotation_adjust(theta0: f64, phi0: f64, rows: *mut f64) -> FpStatus {
    guard(|| {
        out(rows, "rows")?;
        let m = rotation_adjust(&TangentPoint::new(theta0, phi0)).r_adj.rows();
        let dst = std::slice::from_raw_parts_mut(rows, 9);
        for (i, row) in m.iter().enumerate() {
            dst[3 * i..3 * i + 3].copy_from_slice(row);
        }
        Ok(())
    })
}

unsafe fn quat_in(q: *const f64) -> FfiResult<UnitQuaternion> {
    let s = std::slice::from_raw_parts(arg(q, "q")?, 4);
    Ok(UnitQuaternion::new(s[0], s[1], s[2], s[3])?)
}

unsafe fn vec_in(t: *const f64) -> FfiResult<Vec3> {
    let s = std::slice::from_raw_parts(arg(t, "t")?, 3);
    Ok(Vec3::new(s[0], s[1], s[2]))
}

unsafe fn quat_out(q: &UnitQuaternion, dst: *mut f64) -> FfiResult<()> {
    out(dst, "q_out")?;
    std::slice::from_raw_parts_mut(dst, 4).copy_from_slice(&q.to_array());
    Ok(())
}

/// Apparent orientation `R_adj · R` for global orientation `q` at translation `t`.
///
/// # Safety
/// `q` and `q_out` must be valid for 4 doubles, `t` for 3.
#[no_mangle]
pub unsafe extern "C" fn fp_apparent_orientation(q: *const f64, t: *const f64, q_out: *mut f64) -> FpStatus {
    guard(|| quat_out(&apparent_orientation(&quat_in(q)?, &vec_in(t)?)?, q_out))
}

/// Global orientation from apparent orientation `q_p` at translation `t`.
///
/// # Safety
/// `q_p` and `q_out` must be valid for 4 doubles, `t` for 3.
#[no_mangle]
pub unsafe extern "C" fn fp_recover_global_orientation(
    q_p: *const f64,
    t: *const f64,
    q_out: *mut f64,
) -> FpStatus {
    guard(|| quat_out(&recover_global_orientation(&quat_in(q_p)?, &vec_in(t)?)?, q_out))
}

/// Builds the grid of a `width`×`height` virtual perspective view with focal
/// length `f_p` centered on `(theta0, phi0)`.
///
/// # Safety
/// `k` must be a live handle and `out_handle` valid.
#[no_mangle]
pub unsafe extern "C" fn fp_grid_build_perspective(
    k: *const FpIntrinsics,
    theta0: f64,
    phi0: f64,
    width: u32,
    height: u32,
    f_p: f64,
    workers: usize,
    out_handle: *mut *mut FpGrid,
) -> FpStatus {
    guard(|| {
        let k = &arg(k, "k")?.0;
        let slot = out(out_handle, "out_handle")?;
        if workers == 0 {
            return Err(Error::InvalidInput("worker count must be at least 1".into()).into());
        }
        let vcam = VirtualCamera::new(width, height, f_p)?;
        let grid = build_perspective_grid(&TangentPoint::new(theta0, phi0), &vcam, k, workers)?;
        *slot = to_handle(FpGrid(grid));
        Ok(())
    })
}

/// Builds the feature-map grid for the ROI `x, y, w, h` at `stride`.
/// `f_equiv` may be null.
///
/// # Safety
/// `k` must be a live handle and `out_handle` valid.
#[no_mangle]
pub unsafe extern "C" fn fp_grid_build_roi(
    k: *const FpIntrinsics,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    stride: u32,
    workers: usize,
    out_handle: *mut *mut FpGrid,
    f_equiv: *mut f64,
) -> FpStatus {
    guard(|| {
        let k = &arg(k, "k")?.0;
        let slot = out(out_handle, "out_handle")?;
        if workers == 0 {
            return Err(Error::InvalidInput("worker count must be at least 1".into()).into());
        }
        let g = build_roi_feature_grid(&RoiBox::from_xywh(x, y, w, h)?, stride, k, workers)?;
        if let Some(f) = f_equiv.as_mut() {
            *f = g.f_equiv;
        }
        *slot = to_handle(FpGrid(g.grid));
        Ok(())
    })
}

/// # Safety
/// `grid` must be a live handle; `path` NUL terminated.
#[no_mangle]
pub unsafe extern "C" fn fp_grid_save(grid: *const FpGrid, path: *const c_char) -> FpStatus {
    guard(|| Ok(save_grid(&arg(grid, "grid")?.0, path_arg(path)?)?))
}

/// # Safety
/// `path` NUL terminated; `out_handle` valid.
#[no_mangle]
pub unsafe extern "C" fn fp_grid_load(path: *const c_char, out_handle: *mut *mut FpGrid) -> FpStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = to_handle(FpGrid(load_grid(path_arg(path)?)?));
        Ok(())
    })
}

/// # Safety
/// `grid` must be a live handle; `width`, `height` valid.
#[no_mangle]
pub unsafe extern "C" fn fp_grid_dims(grid: *const FpGrid, width: *mut u32, height: *mut u32) -> FpStatus {
    guard(|| {
        let g = &arg(grid, "grid")?.0;
        *out(width, "width")? = g.width;
        *out(height, "height")? = g.height;
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fp_grid_free(grid: *mut FpGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Bilinear remap of an interleaved 8-bit image through `grid`. `dst` must
/// hold `grid width × grid height × channels` bytes; invalid samples get `fill`.
///
/// # Safety
/// `src` must be valid for `src_width × src_height × channels` bytes and
/// `dst` for `dst_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn fp_remap_u8(
    grid: *const FpGrid,
    src: *const u8,
    src_width: u32,
    src_height: u32,
    channels: u32,
    fill: u8,
    workers: usize,
    dst: *mut u8,
    dst_len: usize,
) -> FpStatus {
    guard(|| {
        let g = &arg(grid, "grid")?.0;
        arg(src, "src")?;
        out(dst, "dst")?;
        let n = src_width as usize * src_height as usize * channels as usize;
        let need = g.width as usize * g.height as usize * channels as usize;
        if dst_len < need {
            return Err(
                Error::InvalidInput(format!("destination holds {dst_len} bytes, need {need}")).into(),
            );
        }
        let img = ImageBuffer::from_vec(
            src_width,
            src_height,
            channels,
            std::slice::from_raw_parts(src, n).to_vec(),
        )?;
        let res = remap_image(&img, g, fill, workers)?;
        std::slice::from_raw_parts_mut(dst, need).copy_from_slice(res.data());
        Ok(())
    })
}
