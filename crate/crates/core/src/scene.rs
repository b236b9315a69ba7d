//! Synthetic scenes: object placement, camera trajectories, point
//! projections and simple fisheye renders with exact ground truth.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::annotation::{
    camera_frame_pose, project_bbox, visible_projections, AnnotationRecord, CameraTrajectory, CocoBox,
    TrajectoryFrame,
};
use crate::error::{Error, Result};
use crate::fisheye::{is_within_fov, pixel_to_ray, ray_to_pixel, FisheyeIntrinsics};
use crate::geometry::{Pose6D, RotationMatrix, UnitQuaternion, Vec3};
use crate::metrics::{ModelPoints, SymmetrySpec};
use crate::remap::ImageBuffer;
use crate::sphere::{spherical_to_ray, SphericalCoord};
use crate::viewpoint::apparent_orientation;

/// Seconds between consecutive trajectory frames.
pub const FRAME_INTERVAL: f64 = 1.0 / 30.0;

/// Radius of a rendered model point, in pixels.
pub const SPLAT_RADIUS: f64 = 2.5;

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Procedural model shapes. Dimensions in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    /// Circle of `points` samples in the object XY plane, symmetric about Z.
    Ring { radius: f64, points: u32 },
    /// Box edges sampled with `per_edge` points; half turns about each axis are symmetries.
    Box { size: [f64; 3], per_edge: u32 },
    /// L-shaped bar with unequal arms; no symmetry.
    Handle { long: f64, short: f64, points: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub id: u32,
    pub name: String,
    pub shape: Shape,
}

impl ClassSpec {
    pub fn model_points(&self) -> Result<ModelPoints> {
        let pts = match &self.shape {
            Shape::Ring { radius, points } => {
                if *points == 0 || !(*radius > 0.0) {
                    return Err(Error::invalid("ring needs a positive radius and point count"));
                }
                (0..*points)
                    .map(|i| {
                        let a = TAU * i as f64 / *points as f64;
                        Vec3::new(radius * a.cos(), radius * a.sin(), 0.0)
                    })
                    .collect()
            }
            Shape::Box { size, per_edge } => {
                if *per_edge < 2 || size.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::invalid(
                        "box needs positive extents and at least 2 points per edge",
                    ));
                }
                let h = Vec3::from(*size) * 0.5;
                let mut pts = Vec::new();
                for axis in 0..3 {
                    let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                    for sa in [-1.0, 1.0] {
                        for sb in [-1.0, 1.0] {
                            for i in 0..*per_edge {
                                let mut p = Vec3::zeros();
                                p[axis] = -h[axis] + 2.0 * h[axis] * i as f64 / (*per_edge - 1) as f64;
                                p[a] = sa * h[a];
                                p[b] = sb * h[b];
                                if !pts.contains(&p) {
                                    pts.push(p);
                                }
                            }
                        }
                    }
                }
                pts
            }
            Shape::Handle { long, short, points } => {
                if *points < 2 || !(*long > *short && *short > 0.0) {
                    return Err(Error::invalid(
                        "handle needs long > short > 0 and at least 2 points",
                    ));
                }
                let n = *points as f64;
                let arm = (0..*points).map(|i| Vec3::new(long * (i as f64 / (n - 1.0) - 0.5), 0.0, 0.0));
                let leg = (1..*points).map(|i| Vec3::new(0.5 * long, short * i as f64 / (n - 1.0), 0.0));
                arm.chain(leg).collect()
            }
        };
        ModelPoints::new(self.id, pts)
    }

    pub fn symmetry(&self) -> Result<SymmetrySpec> {
        let flip = |axis: Vec3| UnitQuaternion::from_axis_angle(&axis, PI);
        match &self.shape {
            Shape::Ring { .. } => SymmetrySpec::new(self.id, vec![flip(Vec3::x())?], Some(Vec3::z())),
            Shape::Box { .. } => SymmetrySpec::new(
                self.id,
                vec![flip(Vec3::x())?, flip(Vec3::y())?, flip(Vec3::z())?],
                None,
            ),
            Shape::Handle { .. } => Ok(SymmetrySpec::trivial(self.id)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub class: u32,
    /// `[w, x, y, z]`
    pub q: [f64; 4],
    pub t: [f64; 3],
}

/// Sampling ranges relative to the initial camera. Angles in degrees,
/// elevation positive downward (image +v).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub count: u32,
    pub classes: Vec<u32>,
    pub distance: [f64; 2],
    pub elevation_deg: [f64; 2],
    pub azimuth_deg: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Background {
    Constant {
        value: f32,
    },
    /// Checkerboard ground plane `y = plane_y` (world y points down) with
    /// square cells of `cell` meters; rays missing the plane see `sky`.
    Checkerboard {
        cell: f64,
        plane_y: f64,
        light: f32,
        dark: f32,
        sky: f32,
    },
}

impl Default for Background {
    fn default() -> Self {
        Background::Constant { value: 128.0 }
    }
}

fn default_supersample() -> u32 {
    2
}

fn default_object_value() -> f32 {
    255.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    #[serde(default)]
    pub classes: Vec<ClassSpec>,
    #[serde(default)]
    pub placements: Vec<Placement>,
    #[serde(default)]
    pub sampling: Option<SamplingSpec>,
    #[serde(default)]
    pub background: Background,
    /// Samples per pixel side when rendering the background.
    #[serde(default = "default_supersample")]
    pub supersample: u32,
    #[serde(default = "default_object_value")]
    pub object_value: f32,
}

impl SceneSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(format!("scene spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene spec toml")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::BTreeSet::new();
        for c in &self.classes {
            if !ids.insert(c.id) {
                return Err(Error::Config(format!("duplicate class id {}", c.id)));
            }
            c.model_points()?;
        }
        let known = |id: &u32| {
            ids.contains(id)
                .then_some(())
                .ok_or_else(|| Error::Config(format!("unknown class id {id}")))
        };
        for p in &self.placements {
            known(&p.class)?;
        }
        if let Some(s) = &self.sampling {
            if s.count > 0 && s.classes.is_empty() {
                return Err(Error::invalid("sampling needs at least one class"));
            }
            s.classes.iter().try_for_each(known)?;
            let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
            if !ordered(s.distance) || !(s.distance[0] > 0.0) {
                return Err(Error::invalid("distance range must be positive and ordered"));
            }
            if !ordered(s.elevation_deg) || s.elevation_deg[0] < -90.0 || s.elevation_deg[1] > 90.0 {
                return Err(Error::invalid("elevation range must be ordered within [-90, 90]"));
            }
            if !ordered(s.azimuth_deg) {
                return Err(Error::invalid("azimuth range must be ordered"));
            }
        }
        if self.supersample == 0 {
            return Err(Error::invalid("supersample must be at least 1"));
        }
        if let Background::Checkerboard { cell, plane_y, .. } = self.background {
            if !(cell > 0.0) || !plane_y.is_finite() {
                return Err(Error::invalid("checkerboard needs a positive cell size"));
            }
        }
        Ok(())
    }

    pub fn class(&self, id: u32) -> Option<&ClassSpec> {
        self.classes.iter().find(|c| c.id == id)
    }

    pub fn models(&self) -> Result<BTreeMap<u32, ModelPoints>> {
        self.classes
            .iter()
            .map(|c| Ok((c.id, c.model_points()?)))
            .collect()
    }

    pub fn symmetries(&self) -> Result<BTreeMap<u32, SymmetrySpec>> {
        self.classes.iter().map(|c| Ok((c.id, c.symmetry()?))).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneObject {
    pub object_id: u64,
    pub class_id: u32,
    /// World-frame object pose.
    pub pose: Pose6D,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
}

impl Scene {
    /// Parses `object_id class_id tx ty tz qw qx qy qz` lines (world frame).
    pub fn parse(text: &str) -> Result<Self> {
        let mut objects = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::format(format!("object poses line {}: {msg}", lineno + 1));
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 9 {
                return Err(bad(format!("expected 9 fields, found {}", f.len())));
            }
            let object_id = f[0]
                .parse()
                .map_err(|_| bad(format!("bad object id {:?}", f[0])))?;
            let class_id = f[1]
                .parse()
                .map_err(|_| bad(format!("bad class id {:?}", f[1])))?;
            let mut n = [0.0f64; 7];
            for (slot, tok) in n.iter_mut().zip(&f[2..]) {
                *slot = tok.parse().map_err(|_| bad(format!("bad number {tok:?}")))?;
            }
            let q = UnitQuaternion::new(n[3], n[4], n[5], n[6]).map_err(|e| bad(e.to_string()))?;
            objects.push(SceneObject {
                object_id,
                class_id,
                pose: Pose6D::new(q, Vec3::new(n[0], n[1], n[2])).map_err(|e| bad(e.to_string()))?,
            });
        }
        Ok(Self { objects })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# object_id class_id tx ty tz qw qx qy qz\n");
        for o in &self.objects {
            let t = o.pose.translation;
            let [qw, qx, qy, qz] = o.pose.rotation.to_array();
            s.push_str(&format!(
                "{} {} {:?} {:?} {:?} {:?} {:?} {:?} {:?}\n",
                o.object_id, o.class_id, t.x, t.y, t.z, qw, qx, qy, qz
            ));
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Ok(q) = UnitQuaternion::normalize(q[0], q[1], q[2], q[3]) {
            return q;
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

/// Places the explicit objects, then samples the rest so that every object
/// center projects inside the FOV of `camera` (a world-frame camera pose).
pub fn generate_scene(spec: &SceneSpec, camera: &Pose6D, k: &FisheyeIntrinsics) -> Result<Scene> {
    spec.validate()?;
    let in_fov = |world: &Vec3| {
        let local = camera.inverse().transform_point(world);
        ray_to_pixel(&local, k).is_ok_and(|(u, v)| is_within_fov(u, v, k))
    };
    let mut objects = Vec::new();
    for p in &spec.placements {
        let q = UnitQuaternion::from_array(p.q)?;
        let pose = Pose6D::new(q, Vec3::from(p.t))?;
        if !in_fov(&pose.translation) {
            return Err(Error::invalid(format!(
                "placed object {} lies outside the field of view",
                objects.len()
            )));
        }
        objects.push(SceneObject {
            object_id: objects.len() as u64,
            class_id: p.class,
            pose,
        });
    }
    if let Some(s) = &spec.sampling {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for _ in 0..s.count {
            let mut placed = None;
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let d = uniform(&mut rng, s.distance);
                let el = uniform(&mut rng, s.elevation_deg).to_radians();
                let az = uniform(&mut rng, s.azimuth_deg).to_radians();
                let class_id = s.classes[rng.random_range(0..s.classes.len())];
                let rotation = random_rotation(&mut rng);
                let local = spherical_to_ray(&SphericalCoord::new(el, az)) * d;
                let world = camera.transform_point(&local);
                if in_fov(&world) {
                    placed = Some(SceneObject {
                        object_id: objects.len() as u64,
                        class_id,
                        pose: Pose6D::new(camera.rotation.compose(&rotation), world)?,
                    });
                    break;
                }
            }
            objects.push(
                placed.ok_or_else(|| Error::invalid("sampling ranges do not intersect the field of view"))?,
            );
        }
    }
    Ok(Scene { objects })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MotionSpec {
    /// Every frame at the same camera pose.
    Static {
        #[serde(default = "identity_q")]
        q: [f64; 4],
        #[serde(default)]
        t: [f64; 3],
    },
    /// Camera on a horizontal circle around `center`, looking at it. Angles in
    /// degrees; the sweep endpoint is included.
    Orbit {
        center: [f64; 3],
        radius: f64,
        height: f64,
        start_deg: f64,
        sweep_deg: f64,
    },
}

fn identity_q() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Default for MotionSpec {
    fn default() -> Self {
        MotionSpec::Static {
            q: identity_q(),
            t: [0.0; 3],
        }
    }
}

/// Camera-to-world pose at `eye` looking toward `target`, image up = world −y.
pub fn look_at(eye: &Vec3, target: &Vec3) -> Result<Pose6D> {
    let up = Vec3::new(0.0, -1.0, 0.0);
    let z = target - eye;
    let x = z.cross(&up);
    if z.norm() < 1e-12 || x.norm() < 1e-12 {
        return Err(Error::invalid("look-at direction is degenerate"));
    }
    let z = z.normalize();
    let x = x.normalize();
    let y = z.cross(&x);
    let world_to_cam = RotationMatrix::from_rows([x.into(), y.into(), z.into()])?;
    Pose6D::new(world_to_cam.transpose().to_quaternion(), *eye)
}

pub fn generate_trajectory(n_frames: usize, motion: &MotionSpec) -> Result<CameraTrajectory> {
    if n_frames == 0 {
        return Err(Error::invalid("trajectory needs at least one frame"));
    }
    let poses: Vec<Pose6D> = match motion {
        MotionSpec::Static { q, t } => {
            let pose = Pose6D::new(UnitQuaternion::from_array(*q)?, Vec3::from(*t))?;
            vec![pose; n_frames]
        }
        MotionSpec::Orbit {
            center,
            radius,
            height,
            start_deg,
            sweep_deg,
        } => {
            if !(*radius > 0.0) {
                return Err(Error::invalid("orbit radius must be positive"));
            }
            let c = Vec3::from(*center);
            (0..n_frames)
                .map(|i| {
                    let frac = if n_frames == 1 {
                        0.0
                    } else {
                        i as f64 / (n_frames - 1) as f64
                    };
                    let a = (start_deg + sweep_deg * frac).to_radians();
                    let eye = c + Vec3::new(radius * a.sin(), *height, -radius * a.cos());
                    look_at(&eye, &c)
                })
                .collect::<Result<_>>()?
        }
    };
    CameraTrajectory::new(
        poses
            .into_iter()
            .enumerate()
            .map(|(i, pose)| TrajectoryFrame {
                frame_id: i as u64,
                timestamp: i as f64 * FRAME_INTERVAL,
                pose,
            })
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectProjection {
    pub object_id: u64,
    pub class_id: u32,
    /// `(model point index, u, v)` for in-FOV points.
    pub points: Vec<(usize, f64, f64)>,
}

fn model_for(models: &BTreeMap<u32, ModelPoints>, class_id: u32) -> Result<&ModelPoints> {
    models
        .get(&class_id)
        .ok_or_else(|| Error::Config(format!("no model points for class {class_id}")))
}

pub fn render_point_projections(
    scene: &Scene,
    camera: &Pose6D,
    models: &BTreeMap<u32, ModelPoints>,
    k: &FisheyeIntrinsics,
) -> Result<Vec<ObjectProjection>> {
    scene
        .objects
        .iter()
        .map(|o| {
            let pose_cam = camera_frame_pose(&o.pose, camera);
            Ok(ObjectProjection {
                object_id: o.object_id,
                class_id: o.class_id,
                points: visible_projections(model_for(models, o.class_id)?, &pose_cam, k),
            })
        })
        .collect()
}

fn background_value(bg: &Background, camera: &Pose6D, ray: &Vec3) -> f32 {
    match *bg {
        Background::Constant { value } => value,
        Background::Checkerboard {
            cell,
            plane_y,
            light,
            dark,
            sky,
        } => {
            let dir = camera.rotation.rotate(ray);
            let o = camera.translation;
            if dir.y <= 1e-12 || (plane_y - o.y) / dir.y <= 0.0 {
                return sky;
            }
            let p = o + dir * ((plane_y - o.y) / dir.y);
            let parity = ((p.x / cell).floor() as i64 + (p.z / cell).floor() as i64).rem_euclid(2);
            if parity == 0 {
                light
            } else {
                dark
            }
        }
    }
}

/// Single-channel render: background seen through the fisheye, model points
/// splatted as antialiased discs, 0 outside the FOV circle.
pub fn render_synthetic_image(
    scene: &Scene,
    camera: &Pose6D,
    models: &BTreeMap<u32, ModelPoints>,
    k: &FisheyeIntrinsics,
    spec: &SceneSpec,
) -> Result<ImageBuffer<f32>> {
    let ss = spec.supersample.max(1);
    let mut img = ImageBuffer::filled(k.width, k.height, 1, 0.0f32);
    for y in 0..k.height {
        for x in 0..k.width {
            let (uc, vc) = (x as f64 + 0.5, y as f64 + 0.5);
            if !is_within_fov(uc, vc, k) {
                continue;
            }
            let (mut sum, mut n) = (0.0f64, 0u32);
            for sy in 0..ss {
                for sx in 0..ss {
                    let u = x as f64 + (sx as f64 + 0.5) / ss as f64;
                    let v = y as f64 + (sy as f64 + 0.5) / ss as f64;
                    if let Ok(ray) = pixel_to_ray(u, v, k) {
                        sum += background_value(&spec.background, camera, &ray) as f64;
                        n += 1;
                    }
                }
            }
            if n > 0 {
                img.set(x, y, 0, (sum / n as f64) as f32);
            }
        }
    }
    let value = spec.object_value;
    for proj in render_point_projections(scene, camera, models, k)? {
        for &(_, pu, pv) in &proj.points {
            let r = SPLAT_RADIUS + 0.5;
            let x0 = (pu - r).floor().max(0.0) as u32;
            let y0 = (pv - r).floor().max(0.0) as u32;
            let x1 = ((pu + r).ceil() as u32).min(k.width);
            let y1 = ((pv + r).ceil() as u32).min(k.height);
            for y in y0..y1 {
                for x in x0..x1 {
                    let d = (x as f64 + 0.5 - pu).hypot(y as f64 + 0.5 - pv);
                    let cover = (SPLAT_RADIUS + 0.5 - d).clamp(0.0, 1.0) as f32;
                    if cover > 0.0 {
                        let old = img.get(x, y, 0);
                        img.set(x, y, 0, old + cover * (value - old));
                    }
                }
            }
        }
    }
    Ok(img)
}

/// Camera-frame annotations for every visible object in every frame.
/// Residuals are zero: poses are exact.
pub fn build_annotations(
    scene: &Scene,
    trajectory: &CameraTrajectory,
    models: &BTreeMap<u32, ModelPoints>,
    k: &FisheyeIntrinsics,
) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for frame in trajectory.frames() {
        for o in &scene.objects {
            let pose = camera_frame_pose(&o.pose, &frame.pose);
            let bbox = match project_bbox(model_for(models, o.class_id)?, &pose, k) {
                Ok(b) => b,
                Err(Error::NotVisible) => continue,
                Err(e) => return Err(e),
            };
            out.push(AnnotationRecord {
                frame_id: frame.frame_id,
                class_id: o.class_id,
                object_id: o.object_id,
                pose,
                bbox: CocoBox::from(&bbox.bbox),
                apparent_q: apparent_orientation(&pose.rotation, &pose.translation).ok(),
                visible_fraction: bbox.visible_fraction,
                residual: 0.0,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::quaternion_distance;

    fn spec(count: u32) -> SceneSpec {
        SceneSpec::from_toml_str(&format!(
            r#"
            seed = 11
            [[classes]]
            id = 1
            name = "ring"
            shape = {{ kind = "ring", radius = 0.1, points = 24 }}
            [[classes]]
            id = 2
            name = "handle"
            shape = {{ kind = "handle", long = 0.2, short = 0.08, points = 9 }}
            [sampling]
            count = {count}
            classes = [1, 2]
            distance = [0.8, 2.5]
            elevation_deg = [-60.0, 60.0]
            azimuth_deg = [-120.0, 120.0]
            "#
        ))
        .unwrap()
    }

    fn k() -> FisheyeIntrinsics {
        FisheyeIntrinsics::centered(300.0, 1000, 1000).unwrap()
    }

    #[test]
    fn scenes_are_deterministic_and_in_fov() {
        let cam = Pose6D::identity();
        let a = generate_scene(&spec(20), &cam, &k()).unwrap();
        assert_eq!(a, generate_scene(&spec(20), &cam, &k()).unwrap());
        assert_eq!(a.objects.len(), 20);
        for o in &a.objects {
            let (u, v) = ray_to_pixel(&o.pose.translation, &k()).unwrap();
            assert!(is_within_fov(u, v, &k()));
        }
        assert!(generate_scene(&spec(0), &cam, &k()).unwrap().objects.is_empty());
        let mut other = spec(20);
        other.seed = 12;
        assert_ne!(generate_scene(&other, &cam, &k()).unwrap(), a);
    }

    #[test]
    fn infeasible_ranges_are_rejected() {
        let mut s = spec(1);
        let sampling = s.sampling.as_mut().unwrap();
        sampling.elevation_deg = [0.0, 0.0];
        sampling.azimuth_deg = [179.0, 180.0];
        assert!(matches!(
            generate_scene(&s, &Pose6D::identity(), &k()),
            Err(Error::InvalidInput(_))
        ));
        let mut s = spec(1);
        s.sampling.as_mut().unwrap().distance = [2.0, 1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn orbit_closes_and_stays_unit() {
        let motion = MotionSpec::Orbit {
            center: [0.0, 0.0, 2.0],
            radius: 1.5,
            height: -0.4,
            start_deg: 10.0,
            sweep_deg: 360.0,
        };
        let traj = generate_trajectory(360, &motion).unwrap();
        let f = traj.frames();
        assert_eq!(f.len(), 360);
        assert!((f[0].pose.translation - f[359].pose.translation).norm() < 1e-9);
        assert!(quaternion_distance(&f[0].pose.rotation, &f[359].pose.rotation) < 1e-9);
        for fr in f {
            let q = fr.pose.rotation.to_array();
            let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            // optical axis points at the orbit center
            let axis = fr.pose.rotation.rotate(&Vec3::z());
            let to_c = (Vec3::new(0.0, 0.0, 2.0) - fr.pose.translation).normalize();
            assert!((axis - to_c).norm() < 1e-12);
        }
        let one = generate_trajectory(1, &MotionSpec::default()).unwrap();
        assert_eq!(one.frames()[0].pose, Pose6D::identity());
        assert!(generate_trajectory(0, &MotionSpec::default()).is_err());
    }

    #[test]
    fn on_axis_object_center_hits_principal_point() {
        let ring = ClassSpec {
            id: 1,
            name: "dot".into(),
            shape: Shape::Ring {
                radius: 1e-3,
                points: 4,
            },
        };
        let mut models = BTreeMap::new();
        models.insert(1, ModelPoints::new(1, vec![Vec3::zeros()]).unwrap());
        let scene = Scene {
            objects: vec![SceneObject {
                object_id: 0,
                class_id: ring.id,
                pose: Pose6D::new(UnitQuaternion::identity(), Vec3::new(0.0, 0.0, 2.0)).unwrap(),
            }],
        };
        let p = render_point_projections(&scene, &Pose6D::identity(), &models, &k()).unwrap();
        assert_eq!(p[0].points, vec![(0, 500.0, 500.0)]);
    }

    #[test]
    fn constant_render_without_objects() {
        let mut s = spec(0);
        s.background = Background::Constant { value: 90.0 };
        let k = FisheyeIntrinsics::centered(40.0, 160, 120).unwrap();
        let img = render_synthetic_image(
            &Scene::default(),
            &Pose6D::identity(),
            &s.models().unwrap(),
            &k,
            &s,
        )
        .unwrap();
        for y in 0..k.height {
            for x in 0..k.width {
                let inside = is_within_fov(x as f64 + 0.5, y as f64 + 0.5, &k);
                assert_eq!(img.get(x, y, 0), if inside { 90.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn renders_are_deterministic() {
        let mut s = spec(4);
        s.background = Background::Checkerboard {
            cell: 0.3,
            plane_y: 1.0,
            light: 220.0,
            dark: 40.0,
            sky: 120.0,
        };
        let k = FisheyeIntrinsics::centered(60.0, 200, 200).unwrap();
        let scene = generate_scene(&s, &Pose6D::identity(), &k).unwrap();
        let models = s.models().unwrap();
        let a = render_synthetic_image(&scene, &Pose6D::identity(), &models, &k, &s).unwrap();
        let b = render_synthetic_image(&scene, &Pose6D::identity(), &models, &k, &s).unwrap();
        assert_eq!(a, b);
        // ground below, sky above
        assert!([220.0, 40.0].contains(&a.get(100, 190, 0)));
        assert_eq!(a.get(100, 12, 0), 120.0);
    }

    #[test]
    fn shape_symmetries() {
        for c in &spec(0).classes {
            let sym = c.symmetry().unwrap();
            assert_eq!(sym.class_id, c.id);
        }
        let boxed = ClassSpec {
            id: 3,
            name: "crate".into(),
            shape: Shape::Box {
                size: [0.3, 0.2, 0.1],
                per_edge: 3,
            },
        };
        assert_eq!(boxed.symmetry().unwrap().discrete().len(), 4);
        // 8 corners + 12 edge midpoints
        assert_eq!(boxed.model_points().unwrap().len(), 20);
    }

    #[test]
    fn annotations_cover_visible_objects() {
        let s = spec(6);
        let scene = generate_scene(&s, &Pose6D::identity(), &k()).unwrap();
        let traj = generate_trajectory(3, &MotionSpec::default()).unwrap();
        let models = s.models().unwrap();
        let recs = build_annotations(&scene, &traj, &models, &k()).unwrap();
        assert_eq!(recs.len(), 18);
        let proj = render_point_projections(&scene, &Pose6D::identity(), &models, &k()).unwrap();
        for (rec, p) in recs.iter().zip(&proj) {
            let roi = rec.bbox.to_roi().unwrap().inflated(1e-9);
            assert!(p.points.iter().all(|&(_, u, v)| roi.contains(u, v)));
        }
    }

    #[test]
    fn scene_text_roundtrip() {
        let scene = generate_scene(&spec(5), &Pose6D::identity(), &k()).unwrap();
        assert_eq!(Scene::parse(&scene.to_text()).unwrap(), scene);
        assert!(Scene::parse("0 1 0 0 1 1 0 0\n").is_err());
    }
}
