//! Pose annotation pipeline: camera trajectories, camera-frame object poses,
//! fisheye bounding boxes and a COCO-style annotation file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fisheye::{is_within_fov, ray_to_pixel, FisheyeIntrinsics};
use crate::geometry::{Pose6D, UnitQuaternion, Vec3};
use crate::metrics::{ModelPoints, SymmetrySpec};
use crate::remap::RoiBox;

/// Version written to `info.schema_version`.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryFrame {
    pub frame_id: u64,
    pub timestamp: f64,
    /// World-frame camera pose (camera to world).
    pub pose: Pose6D,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CameraTrajectory {
    frames: Vec<TrajectoryFrame>,
}

impl CameraTrajectory {
    pub fn new(frames: Vec<TrajectoryFrame>) -> Result<Self> {
        if let Some(w) = frames.windows(2).find(|w| w[0].frame_id >= w[1].frame_id) {
            return Err(Error::invalid(format!(
                "frame ids must be unique and ascending: {} then {}",
                w[0].frame_id, w[1].frame_id
            )));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[TrajectoryFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn get(&self, frame_id: u64) -> Option<&TrajectoryFrame> {
        self.frames
            .binary_search_by_key(&frame_id, |f| f.frame_id)
            .ok()
            .map(|i| &self.frames[i])
    }

    /// Parses `frame_id timestamp tx ty tz qw qx qy qz` lines. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut frames = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::format(format!("trajectory line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 9 {
                return Err(bad(format!("expected 9 fields, found {}", fields.len())));
            }
            let frame_id: u64 = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad frame id {:?}", fields[0])))?;
            let mut nums = [0.0f64; 8];
            for (slot, tok) in nums.iter_mut().zip(&fields[1..]) {
                *slot = tok.parse().map_err(|_| bad(format!("bad number {tok:?}")))?;
            }
            let q =
                UnitQuaternion::new(nums[4], nums[5], nums[6], nums[7]).map_err(|e| bad(e.to_string()))?;
            let pose =
                Pose6D::new(q, Vec3::new(nums[1], nums[2], nums[3])).map_err(|e| bad(e.to_string()))?;
            frames.push(TrajectoryFrame {
                frame_id,
                timestamp: nums[0],
                pose,
            });
        }
        Self::new(frames).map_err(|e| Error::format(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# frame_id timestamp tx ty tz qw qx qy qz\n");
        for f in &self.frames {
            let t = f.pose.translation;
            let [qw, qx, qy, qz] = f.pose.rotation.to_array();
            let _ = writeln!(
                s,
                "{} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?}",
                f.frame_id, f.timestamp, t.x, t.y, t.z, qw, qx, qy, qz
            );
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

/// `T_cam_obj = T_world_cam⁻¹ ∘ T_world_obj`.
pub fn camera_frame_pose(world_obj: &Pose6D, world_cam: &Pose6D) -> Pose6D {
    world_cam.inverse().compose(world_obj)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedBox {
    pub bbox: RoiBox,
    /// Fraction of model points that project inside the field of view.
    pub visible_fraction: f64,
}

/// Fisheye projections of the model points that fall inside the FOV, with
/// their point indices.
pub fn visible_projections(
    model: &ModelPoints,
    pose_cam: &Pose6D,
    k: &FisheyeIntrinsics,
) -> Vec<(usize, f64, f64)> {
    model
        .points()
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let (u, v) = ray_to_pixel(&pose_cam.transform_point(p), k).ok()?;
            is_within_fov(u, v, k).then_some((i, u, v))
        })
        .collect()
}

/// Axis-aligned box around the in-FOV model point projections, clamped to
/// the image. A box collapsing to a point or line is widened to 1 px.
pub fn project_bbox(model: &ModelPoints, pose_cam: &Pose6D, k: &FisheyeIntrinsics) -> Result<ProjectedBox> {
    let visible = visible_projections(model, pose_cam, k);
    if visible.is_empty() {
        return Err(Error::NotVisible);
    }
    let (mut u0, mut v0, mut u1, mut v1) =
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(_, u, v) in &visible {
        u0 = u0.min(u);
        v0 = v0.min(v);
        u1 = u1.max(u);
        v1 = v1.max(v);
    }
    let (w, h) = (k.width as f64, k.height as f64);
    let widen = |lo: f64, hi: f64, limit: f64| {
        if hi - lo >= 1.0 {
            return (lo, hi);
        }
        let c = 0.5 * (lo + hi);
        let lo = (c - 0.5).clamp(0.0, limit - 1.0);
        (lo, lo + 1.0)
    };
    let (u0, u1) = widen(u0.clamp(0.0, w), u1.clamp(0.0, w), w);
    let (v0, v1) = widen(v0.clamp(0.0, h), v1.clamp(0.0, h), h);
    Ok(ProjectedBox {
        bbox: RoiBox::new(u0, v0, u1, v1)?,
        visible_fraction: visible.len() as f64 / model.len() as f64,
    })
}

/// COCO `[x, y, w, h]` box in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct CocoBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for CocoBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl From<CocoBox> for [f64; 4] {
    fn from(b: CocoBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl From<&RoiBox> for CocoBox {
    fn from(r: &RoiBox) -> Self {
        Self {
            x: r.u_min,
            y: r.v_min,
            w: r.width(),
            h: r.height(),
        }
    }
}

impl CocoBox {
    pub fn to_roi(&self) -> Result<RoiBox> {
        RoiBox::from_xywh(self.x, self.y, self.w, self.h)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationRecord {
    pub frame_id: u64,
    pub class_id: u32,
    pub object_id: u64,
    /// Object pose in the camera frame.
    pub pose: Pose6D,
    pub bbox: CocoBox,
    pub apparent_q: Option<UnitQuaternion>,
    pub visible_fraction: f64,
    /// Reprojection residual in pixels, supplied by the producer.
    pub residual: f64,
}

/// Keeps records with `residual <= max_residual`, in order.
pub fn filter_outliers(records: &[AnnotationRecord], max_residual: f64) -> Vec<AnnotationRecord> {
    records
        .iter()
        .filter(|r| r.residual <= max_residual)
        .cloned()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub sequence: String,
    #[serde(default)]
    pub timestamp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: u32,
    pub name: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetIndex {
    /// Intrinsics file, relative to the annotation file's directory.
    pub intrinsics: Option<String>,
    pub images: Vec<ImageEntry>,
    pub categories: Vec<Category>,
}

impl DatasetIndex {
    /// Image entries grouped by sequence name.
    pub fn sequences(&self) -> BTreeMap<&str, Vec<&ImageEntry>> {
        let mut out: BTreeMap<&str, Vec<&ImageEntry>> = BTreeMap::new();
        for img in &self.images {
            out.entry(img.sequence.as_str()).or_default().push(img);
        }
        out
    }

    /// Verifies that every referenced file exists below `root`.
    pub fn check_files(&self, root: impl AsRef<Path>) -> Result<()> {
        let root = root.as_ref();
        let paths = self
            .intrinsics
            .iter()
            .chain(self.images.iter().map(|i| &i.file_name));
        for rel in paths {
            let p: PathBuf = root.join(rel);
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file missing"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Info {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intrinsics: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct PoseJson {
    q: [f64; 4],
    t: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct AnnotationJson {
    id: u64,
    image_id: u64,
    category_id: u32,
    object_id: u64,
    bbox: CocoBox,
    area: f64,
    iscrowd: u8,
    pose: PoseJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    apparent_q: Option<[f64; 4]>,
    visible_fraction: f64,
    #[serde(default)]
    residual: f64,
}

#[derive(Serialize)]
struct FileJson<'a> {
    info: Info,
    images: &'a [ImageEntry],
    annotations: Vec<AnnotationJson>,
    categories: &'a [Category],
}

pub fn coco_to_string(records: &[AnnotationRecord], index: &DatasetIndex) -> String {
    let annotations = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = r.pose.translation;
            AnnotationJson {
                id: i as u64 + 1,
                image_id: r.frame_id,
                category_id: r.class_id,
                object_id: r.object_id,
                bbox: r.bbox,
                area: r.bbox.w * r.bbox.h,
                iscrowd: 0,
                pose: PoseJson {
                    q: r.pose.rotation.to_array(),
                    t: [t.x, t.y, t.z],
                },
                apparent_q: r.apparent_q.map(|q| q.to_array()),
                visible_fraction: r.visible_fraction,
                residual: r.residual,
            }
        })
        .collect();
    let file = FileJson {
        info: Info {
            schema_version: SCHEMA_VERSION,
            intrinsics: index.intrinsics.clone(),
        },
        images: &index.images,
        annotations,
        categories: &index.categories,
    };
    serde_json::to_string_pretty(&file).expect("annotation json")
}

pub fn coco_from_str(text: &str) -> Result<(Vec<AnnotationRecord>, DatasetIndex)> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| Error::format(format!("annotation file: {e}")))?;
    let field = |key: &str| {
        root.get(key)
            .ok_or_else(|| Error::format(format!("annotation file: missing top-level {key:?}")))
    };
    let info: Info = serde_json::from_value(field("info")?.clone())
        .map_err(|e| Error::format(format!("annotation file info: {e}")))?;
    if info.schema_version != SCHEMA_VERSION {
        return Err(Error::format(format!(
            "unsupported annotation schema version {}",
            info.schema_version
        )));
    }
    let images: Vec<ImageEntry> = serde_json::from_value(field("images")?.clone())
        .map_err(|e| Error::format(format!("annotation file images: {e}")))?;
    let categories: Vec<Category> = serde_json::from_value(field("categories")?.clone())
        .map_err(|e| Error::format(format!("annotation file categories: {e}")))?;
    let raw = field("annotations")?
        .as_array()
        .ok_or_else(|| Error::format("annotation file: \"annotations\" is not an array"))?;

    let mut records = Vec::with_capacity(raw.len());
    for (i, value) in raw.iter().enumerate() {
        let name = match value.get("id").and_then(Value::as_u64) {
            Some(id) => format!("annotation {i} (id {id})"),
            None => format!("annotation {i}"),
        };
        let bad = |msg: String| Error::format(format!("{name}: {msg}"));
        let a: AnnotationJson = serde_json::from_value(value.clone()).map_err(|e| bad(e.to_string()))?;
        let rotation = UnitQuaternion::from_array(a.pose.q).map_err(|e| bad(e.to_string()))?;
        let [tx, ty, tz] = a.pose.t;
        let pose = Pose6D::new(rotation, Vec3::new(tx, ty, tz)).map_err(|e| bad(e.to_string()))?;
        let apparent_q = a
            .apparent_q
            .map(UnitQuaternion::from_array)
            .transpose()
            .map_err(|e| bad(e.to_string()))?;
        records.push(AnnotationRecord {
            frame_id: a.image_id,
            class_id: a.category_id,
            object_id: a.object_id,
            pose,
            bbox: a.bbox,
            apparent_q,
            visible_fraction: a.visible_fraction,
            residual: a.residual,
        });
    }
    let index = DatasetIndex {
        intrinsics: info.intrinsics,
        images,
        categories,
    };
    Ok((records, index))
}

pub fn export_coco(records: &[AnnotationRecord], index: &DatasetIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, coco_to_string(records, index)).map_err(|e| Error::io(path, e))
}

pub fn import_coco(path: impl AsRef<Path>) -> Result<(Vec<AnnotationRecord>, DatasetIndex)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    coco_from_str(&text)
}

/// Class list linking ids to names, model point files and symmetry files.
/// Paths are relative to the catalog file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    #[serde(default)]
    pub classes: Vec<CatalogEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub id: u32,
    pub name: String,
    pub points: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<String>,
}

/// Models, symmetries and names keyed by class id.
#[derive(Clone, Debug, Default)]
pub struct LoadedCatalog {
    pub models: BTreeMap<u32, ModelPoints>,
    pub symmetries: BTreeMap<u32, SymmetrySpec>,
    pub names: BTreeMap<u32, String>,
}

impl Catalog {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("catalog: {e}")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("catalog toml")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    /// Reads the catalog and every file it references.
    pub fn load(path: impl AsRef<Path>) -> Result<LoadedCatalog> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cat = Self::from_toml_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut out = LoadedCatalog::default();
        for c in &cat.classes {
            if out.names.insert(c.id, c.name.clone()).is_some() {
                return Err(Error::Config(format!("duplicate class id {} in catalog", c.id)));
            }
            out.models
                .insert(c.id, ModelPoints::load(c.id, dir.join(&c.points))?);
            let sym = match &c.symmetry {
                Some(p) => {
                    let s = SymmetrySpec::load(dir.join(p))?;
                    if s.class_id != c.id {
                        return Err(Error::Config(format!(
                            "symmetry file {p} is for class {}, expected {}",
                            s.class_id, c.id
                        )));
                    }
                    s
                }
                None => SymmetrySpec::trivial(c.id),
            };
            out.symmetries.insert(c.id, sym);
        }
        Ok(out)
    }
}
