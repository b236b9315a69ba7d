//! Equidistant fisheye camera model: `r = f·θ`.
//!
//! Pixel coordinates are continuous with pixel `(i, j)` centered at
//! `(i + 0.5, j + 0.5)`. Centered coordinates are `x = u − cx`, `y = v − cy`
//! with y pointing down.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Default full FOV of the lens (185°).
pub const DEFAULT_FOV_MAX_DEG: f64 = 185.0;

/// Largest full cone angle used when building sampling grids.
pub const USABLE_GRID_FOV_DEG: f64 = 178.0;

/// Centered radius below which a pixel is treated as lying on the optical axis.
pub const ON_AXIS_RADIUS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisheyeIntrinsics {
    /// Focal length in pixels.
    pub f: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Full cone angle in radians.
    pub fov_max: f64,
}

impl FisheyeIntrinsics {
    pub fn new(f: f64, cx: f64, cy: f64, width: u32, height: u32, fov_max: f64) -> Result<Self> {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::invalid(format!("focal length must be positive, got {f}")));
        }
        if !(fov_max.is_finite() && fov_max > 0.0 && fov_max < std::f64::consts::TAU) {
            return Err(Error::invalid(format!(
                "fov_max must lie in (0, 2π), got {fov_max}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if !(cx >= 0.0 && cx < width as f64 && cy >= 0.0 && cy < height as f64) {
            return Err(Error::invalid(format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(Self {
            f,
            cx,
            cy,
            width,
            height,
            fov_max,
        })
    }

    /// Principal point at the image center, default 185° FOV.
    pub fn centered(f: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(
            f,
            width as f64 / 2.0,
            height as f64 / 2.0,
            width,
            height,
            DEFAULT_FOV_MAX_DEG.to_radians(),
        )
    }

    pub fn half_fov(&self) -> f64 {
        0.5 * self.fov_max
    }

    /// Half cone angle used for grid validity, never above 89°.
    pub fn usable_half_fov(&self) -> f64 {
        0.5 * self.fov_max.min(USABLE_GRID_FOV_DEG.to_radians())
    }

    /// Same model restricted to the usable grid cone.
    pub fn with_usable_fov(&self) -> Self {
        Self {
            fov_max: 2.0 * self.usable_half_fov(),
            ..*self
        }
    }

    /// Intrinsics of the image after an area-average downsample by `factor`.
    pub fn downsampled(&self, factor: u32) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("downsample factor must be at least 1"));
        }
        let k = factor as f64;
        let width = self.width / factor;
        let height = self.height / factor;
        Self::new(self.f / k, self.cx / k, self.cy / k, width, height, self.fov_max)
    }

    pub fn in_bounds(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u <= self.width as f64 && v >= 0.0 && v <= self.height as f64
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: IntrinsicsFile =
            toml::from_str(text).map_err(|e| Error::format(format!("intrinsics file: {e}")))?;
        if file.model != "equidistant" {
            return Err(Error::format(format!(
                "unsupported camera model {:?}, expected \"equidistant\"",
                file.model
            )));
        }
        Self::new(
            file.f,
            file.cx,
            file.cy,
            file.width,
            file.height,
            file.fov_max_deg.unwrap_or(DEFAULT_FOV_MAX_DEG).to_radians(),
        )
    }

    pub fn to_toml_string(&self) -> String {
        let file = IntrinsicsFile {
            model: "equidistant".into(),
            f: self.f,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
            fov_max_deg: Some(self.fov_max.to_degrees()),
        };
        toml::to_string(&file).expect("intrinsics serialize")
    }
}

/// On-disk form of [`FisheyeIntrinsics`].
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntrinsicsFile {
    model: String,
    f: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
    fov_max_deg: Option<f64>,
}

/// Projects a camera-frame direction to fisheye pixel coordinates.
pub fn ray_to_pixel(ray: &Vec3, k: &FisheyeIntrinsics) -> Result<(f64, f64)> {
    let lateral = ray.x.hypot(ray.y);
    if !(lateral.is_finite() && ray.z.is_finite()) || (lateral == 0.0 && ray.z == 0.0) {
        return Err(Error::invalid("ray must be non-zero and finite"));
    }
    let incidence = lateral.atan2(ray.z);
    if incidence > k.half_fov() {
        return Err(Error::OutOfFov {
            incidence,
            half_fov: k.half_fov(),
        });
    }
    if lateral == 0.0 {
        return Ok((k.cx, k.cy));
    }
    let r = k.f * incidence;
    Ok((k.cx + r * ray.x / lateral, k.cy + r * ray.y / lateral))
}

/// Back-projects a fisheye pixel to a unit ray.
pub fn pixel_to_ray(u: f64, v: f64, k: &FisheyeIntrinsics) -> Result<Vec3> {
    let x = u - k.cx;
    let y = v - k.cy;
    let r = x.hypot(y);
    if !r.is_finite() {
        return Err(Error::invalid("pixel coordinates must be finite"));
    }
    if r < ON_AXIS_RADIUS {
        return Ok(Vec3::z());
    }
    let incidence = r / k.f;
    if incidence > k.half_fov() {
        return Err(Error::OutOfFov {
            incidence,
            half_fov: k.half_fov(),
        });
    }
    let (s, c) = incidence.sin_cos();
    Ok(Vec3::new(s * x / r, s * y / r, c))
}

/// True iff the pixel is inside the FOV disk and the image bounds (both closed).
pub fn is_within_fov(u: f64, v: f64, k: &FisheyeIntrinsics) -> bool {
    let r = (u - k.cx).hypot(v - k.cy);
    r <= k.f * k.half_fov() && k.in_bounds(u, v)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use approx::assert_abs_diff_eq;

    use super::*;

    fn k350() -> FisheyeIntrinsics {
        FisheyeIntrinsics::new(350.0, 0.0, 0.0, 2000, 2000, DEFAULT_FOV_MAX_DEG.to_radians()).unwrap()
    }

    #[test]
    fn on_axis_ray_hits_principal_point() {
        assert_eq!(ray_to_pixel(&Vec3::z(), &k350()).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn radius_is_linear_in_incidence() {
        let ray = Vec3::new(0.5f64.sin(), 0.0, 0.5f64.cos());
        let (u, v) = ray_to_pixel(&ray, &k350()).unwrap();
        assert_abs_diff_eq!(u, 175.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);

        let (u, v) = ray_to_pixel(&Vec3::x(), &k350()).unwrap();
        assert_abs_diff_eq!(u, 350.0 * FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(u, 549.778_714_378_213_8, epsilon = 1e-9);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn ray_errors() {
        assert!(matches!(
            ray_to_pixel(&Vec3::zeros(), &k350()),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            ray_to_pixel(&Vec3::new(0.0, 0.0, -1.0), &k350()),
            Err(Error::OutOfFov { .. })
        ));
    }

    #[test]
    fn principal_point_back_projects_to_axis() {
        let k = FisheyeIntrinsics::centered(350.0, 800, 600).unwrap();
        assert_eq!(pixel_to_ray(400.0, 300.0, &k).unwrap(), Vec3::z());
        assert_eq!(pixel_to_ray(400.0 + 1e-10, 300.0, &k).unwrap(), Vec3::z());
    }

    #[test]
    fn offset_pixel_back_projects() {
        let ray = pixel_to_ray(175.0, 0.0, &k350()).unwrap();
        assert_abs_diff_eq!(ray, Vec3::new(0.5f64.sin(), 0.0, 0.5f64.cos()), epsilon = 1e-15);
        assert_abs_diff_eq!(ray.x, 0.4794, epsilon = 1e-4);
        assert_abs_diff_eq!(ray.z, 0.8776, epsilon = 1e-4);
        let far = 350.0 * k350().half_fov() + 1.0;
        assert!(matches!(
            pixel_to_ray(far, 0.0, &k350()),
            Err(Error::OutOfFov { .. })
        ));
    }

    #[test]
    fn fov_boundary_is_closed() {
        let k = FisheyeIntrinsics::new(300.0, 1000.0, 1000.0, 2000, 2000, 2.0).unwrap();
        let edge = k.f * k.half_fov();
        assert!(is_within_fov(1000.0, 1000.0, &k));
        assert!(is_within_fov(1000.0 + edge, 1000.0, &k));
        assert!(!is_within_fov(1000.0 + edge + 1.0, 1000.0, &k));
        // inside the disk but outside the image
        let k = FisheyeIntrinsics::new(300.0, 10.0, 10.0, 20, 20, 3.0).unwrap();
        assert!(!is_within_fov(25.0, 10.0, &k));
    }

    #[test]
    fn intrinsics_validation() {
        assert!(FisheyeIntrinsics::new(0.0, 1.0, 1.0, 10, 10, 3.0).is_err());
        assert!(FisheyeIntrinsics::new(1.0, 10.0, 1.0, 10, 10, 3.0).is_err());
        assert!(FisheyeIntrinsics::new(1.0, 1.0, 1.0, 10, 10, 7.0).is_err());
        assert!(FisheyeIntrinsics::new(1.0, 1.0, 1.0, 0, 10, 3.0).is_err());
    }

    #[test]
    fn intrinsics_file_roundtrip() {
        let k = FisheyeIntrinsics::new(758.3, 1224.0, 1024.0, 2448, 2048, 3.1).unwrap();
        let back = FisheyeIntrinsics::from_toml_str(&k.to_toml_string()).unwrap();
        assert_eq!(back.f, k.f);
        assert_eq!((back.width, back.height), (2448, 2048));
        assert_abs_diff_eq!(back.fov_max, k.fov_max, epsilon = 1e-15);

        let text = "model = \"equidistant\"\nf = 700.0\ncx = 10.0\ncy = 12.0\nwidth = 20\nheight = 24\n";
        let k = FisheyeIntrinsics::from_toml_str(text).unwrap();
        assert_abs_diff_eq!(k.fov_max, DEFAULT_FOV_MAX_DEG.to_radians());

        let bad = text.replace("equidistant", "stereographic");
        assert!(matches!(
            FisheyeIntrinsics::from_toml_str(&bad),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn downsampling_scales_intrinsics() {
        let k = FisheyeIntrinsics::centered(758.0, 2448, 2048).unwrap();
        let d = k.downsampled(3).unwrap();
        assert_eq!((d.width, d.height), (816, 682));
        assert_abs_diff_eq!(d.f, 758.0 / 3.0);
        assert_abs_diff_eq!(d.cx, 408.0);
    }

    #[test]
    fn usable_fov_is_clamped() {
        let k = FisheyeIntrinsics::centered(758.0, 2448, 2048).unwrap();
        assert_abs_diff_eq!(k.usable_half_fov(), 89f64.to_radians(), epsilon = 1e-15);
        let narrow = FisheyeIntrinsics::new(758.0, 1.0, 1.0, 10, 10, 1.0).unwrap();
        assert_eq!(narrow.usable_half_fov(), 0.5);
    }
}
