//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::annotation::{
    export_coco, filter_outliers, import_coco, CameraTrajectory, Catalog, CatalogEntry, Category,
    DatasetIndex, ImageEntry,
};
use crate::error::{Error, Result};
use crate::fisheye::{pixel_to_ray, FisheyeIntrinsics};
use crate::geometry::{UnitQuaternion, Vec3};
use crate::metrics::{
    run_harness, ConstantPosePredictor, EvalDataset, GroundTruthRecord, HarnessConfig, NoisyOraclePredictor,
    OrientationFrame, PerfectOraclePredictor, Predictor, DEFAULT_MAX_ADDS_THRESHOLD,
    DEFAULT_ORIENTATION_THRESHOLDS_DEG, DEFAULT_TRANSLATION_THRESHOLDS,
};
use crate::remap::{
    build_perspective_grid, build_roi_feature_grid, downsample, load_grid, load_png, remap_image,
    run_in_pool, save_grid, save_png, validity_mask, RoiBox, SampleGrid, VirtualCamera,
};
use crate::scene::{
    build_annotations, generate_scene, generate_trajectory, render_synthetic_image, MotionSpec, Scene,
    SceneSpec,
};
use crate::sphere::{gnomonic_forward, pixel_to_spherical, spherical_to_pixel, SphericalCoord, TangentPoint};
use crate::viewpoint::{adjust_for_translation, apparent_orientation, recover_global_orientation};

#[derive(Debug, Parser)]
#[command(
    name = "fishpose",
    version,
    about = "Fisheye to tangent-plane geometry and pose evaluation tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resample a fisheye image into a virtual perspective view or ROI grid.
    Remap(RemapArgs),
    /// Pixel and spherical coordinate queries.
    Sphere(SphereArgs),
    /// Convert between global and apparent orientations.
    Viewpoint(ViewpointArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Build a COCO-style annotation file from a trajectory and world poses.
    Annotate(AnnotateArgs),
    /// Score a predictor against an annotation file.
    Eval(EvalArgs),
    /// Build and save a sampling grid.
    Grid(GridArgs),
}

fn floats<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("{t:?} is not a number"))
        })
        .collect::<std::result::Result<_, _>>()?;
    if vals.iter().any(|v| !v.is_finite()) {
        return Err("values must be finite".into());
    }
    vals.try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

fn vcam(s: &str) -> std::result::Result<VirtualCamera, String> {
    let [w, h, f] = floats::<3>(s)?;
    let int = |x: f64| (x.fract() == 0.0 && x >= 1.0 && x <= u32::MAX as f64).then_some(x as u32);
    match (int(w), int(h)) {
        (Some(w), Some(h)) if f > 0.0 => VirtualCamera::new(w, h, f).map_err(|e| e.to_string()),
        _ => Err("expected W,H,F with positive integer W, H and positive F".into()),
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("{s:?} is not a non-negative number")),
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Target {
    /// Tangent point `theta,phi` in degrees.
    #[arg(long, value_parser = floats::<2>, allow_hyphen_values = true)]
    pub tangent: Option<[f64; 2]>,
    /// Region of interest `x,y,w,h` in fisheye pixels.
    #[arg(long, value_parser = floats::<4>, allow_hyphen_values = true)]
    pub roi: Option<[f64; 4]>,
}

#[derive(Debug, Args)]
pub struct ViewArgs {
    #[command(flatten)]
    pub target: Target,
    /// Virtual camera `W,H,F`.
    #[arg(long, value_parser = vcam, default_value = "400,400,350")]
    pub vcam: VirtualCamera,
    /// With `--roi`: build the feature-map grid at this stride instead of a
    /// perspective view. The input image is then the stride-reduced feature map.
    #[arg(long, requires = "roi", value_parser = clap::value_parser!(u32).range(1..))]
    pub stride: Option<u32>,
    /// Integer downsampling applied to the fisheye image and intrinsics first.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub downsample: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..1025))]
    pub workers: u64,
}

#[derive(Debug, Args)]
pub struct RemapArgs {
    #[arg(long)]
    pub intrinsics: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub view: ViewArgs,
    /// Use a saved grid instead of building one.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Also write the validity mask.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub intrinsics: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub view: ViewArgs,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SphereQuery {
    /// Fisheye pixel `u,v`.
    #[arg(long, value_parser = floats::<2>, allow_hyphen_values = true)]
    pub pixel: Option<[f64; 2]>,
    /// Spherical coordinate `theta,phi` in degrees.
    #[arg(long, value_parser = floats::<2>, allow_hyphen_values = true)]
    pub spherical: Option<[f64; 2]>,
}

#[derive(Debug, Args)]
pub struct SphereArgs {
    #[arg(long)]
    pub intrinsics: PathBuf,
    #[command(flatten)]
    pub query: SphereQuery,
    /// Also report gnomonic coordinates about this tangent point (degrees).
    #[arg(long, value_parser = floats::<2>, allow_hyphen_values = true)]
    pub tangent: Option<[f64; 2]>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct OrientationInput {
    /// Global orientation `w,x,y,z`.
    #[arg(long, value_parser = floats::<4>, allow_hyphen_values = true)]
    pub q: Option<[f64; 4]>,
    /// Apparent orientation `w,x,y,z`.
    #[arg(long, value_parser = floats::<4>, allow_hyphen_values = true)]
    pub qp: Option<[f64; 4]>,
}

#[derive(Debug, Args)]
pub struct ViewpointArgs {
    /// Object translation `x,y,z` in meters.
    #[arg(long, value_parser = floats::<3>, allow_hyphen_values = true)]
    pub t: [f64; 3],
    #[command(flatten)]
    pub orientation: OrientationInput,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene spec (TOML).
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub frames: u64,
    /// Camera motion spec (TOML); static identity camera if omitted.
    #[arg(long)]
    pub motion: Option<PathBuf>,
    /// Skip rendering images.
    #[arg(long)]
    pub no_images: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..1025))]
    pub workers: u64,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    /// World object poses, `object_id class_id tx ty tz qw qx qy qz` per line.
    #[arg(long)]
    pub objects: PathBuf,
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-record residuals, `frame_id object_id residual` per line.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    /// Drop records whose residual exceeds this many pixels.
    #[arg(long, value_parser = non_negative)]
    pub max_residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PredictorKind {
    Perfect,
    Noisy,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FrameKind {
    Apparent,
    Global,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long, value_enum)]
    pub predictor: PredictorKind,
    #[arg(long)]
    pub seed: u64,
    /// Translation noise per axis, meters.
    #[arg(long, default_value_t = 0.02, value_parser = non_negative)]
    pub sigma_t: f64,
    /// Rotation noise per axis, degrees.
    #[arg(long, default_value_t = 2.0, value_parser = non_negative)]
    pub sigma_r: f64,
    /// Translation thresholds in meters.
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    pub thresholds: Option<Vec<f64>>,
    /// Orientation thresholds in degrees.
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    pub orientation_thresholds: Option<Vec<f64>>,
    #[arg(long = "max-add-s", default_value_t = DEFAULT_MAX_ADDS_THRESHOLD, value_parser = positive)]
    pub max_add_s: f64,
    #[arg(long, value_enum, default_value_t = FrameKind::Apparent)]
    pub frame: FrameKind,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..1025))]
    pub workers: u64,
    /// Write the report as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code: 0 on success, 2 on usage errors and 1 on
/// any other failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Remap(a) => cmd_remap(a),
        Command::Sphere(a) => cmd_sphere(a),
        Command::Viewpoint(a) => cmd_viewpoint(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Annotate(a) => cmd_annotate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Grid(a) => cmd_grid(a),
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

fn load_intrinsics(path: &Path, factor: u32) -> Result<FisheyeIntrinsics> {
    let k = FisheyeIntrinsics::load(path)?;
    if factor > 1 {
        k.downsampled(factor)
    } else {
        Ok(k)
    }
}

fn build_view_grid(view: &ViewArgs, k: &FisheyeIntrinsics) -> Result<(SampleGrid, String)> {
    let workers = view.workers as usize;
    if let Some([theta, phi]) = view.target.tangent {
        let t0 = TangentPoint::from_degrees(theta, phi);
        let grid = build_perspective_grid(&t0, &view.vcam, k, workers)?;
        return Ok((grid, format!("tangent ({theta}, {phi}) deg")));
    }
    let [x, y, w, h] = view.target.roi.expect("target group is required");
    let roi = RoiBox::from_xywh(x, y, w, h)?;
    match view.stride {
        Some(stride) => {
            let g = build_roi_feature_grid(&roi, stride, k, workers)?;
            let desc = format!(
                "roi feature grid, tangent ({:.6}, {:.6}) deg, f_equiv {:.6}",
                g.tangent.theta0.to_degrees(),
                g.tangent.phi0.to_degrees(),
                g.f_equiv
            );
            Ok((g.grid, desc))
        }
        None => {
            let (cu, cv) = roi.center();
            let t0: TangentPoint = pixel_to_spherical(cu, cv, k)?.into();
            let grid = build_perspective_grid(&t0, &view.vcam, k, workers)?;
            let desc = format!(
                "roi view, tangent ({:.6}, {:.6}) deg",
                t0.theta0.to_degrees(),
                t0.phi0.to_degrees()
            );
            Ok((grid, desc))
        }
    }
}

fn cmd_remap(a: &RemapArgs) -> Result<()> {
    let factor = a.view.downsample;
    let k = load_intrinsics(&a.intrinsics, factor)?;
    let mut img = load_png(&a.image)?;
    if factor > 1 {
        img = downsample(&img, factor)?;
    }
    let (grid, desc) = match &a.grid {
        Some(path) => (load_grid(path)?, format!("cached grid {}", path.display())),
        None => build_view_grid(&a.view, &k)?,
    };
    let out = remap_image(&img, &grid, 0u8, a.view.workers as usize)?;
    create_parent(&a.out)?;
    save_png(&out, &a.out)?;
    if let Some(mask) = &a.mask {
        create_parent(mask)?;
        save_png(&validity_mask(&grid), mask)?;
    }
    println!(
        "{}: {}x{}, {} of {} pixels sampled ({desc})",
        a.out.display(),
        grid.width,
        grid.height,
        grid.valid_count(),
        grid.len()
    );
    Ok(())
}

fn cmd_grid(a: &GridArgs) -> Result<()> {
    let k = load_intrinsics(&a.intrinsics, a.view.downsample)?;
    let (grid, desc) = build_view_grid(&a.view, &k)?;
    create_parent(&a.out)?;
    save_grid(&grid, &a.out)?;
    println!(
        "{}: {}x{} grid, {} valid ({desc})",
        a.out.display(),
        grid.width,
        grid.height,
        grid.valid_count()
    );
    Ok(())
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn cmd_sphere(a: &SphereArgs) -> Result<()> {
    let k = FisheyeIntrinsics::load(&a.intrinsics)?;
    let (s, u, v) = match (a.query.pixel, a.query.spherical) {
        (Some([u, v]), _) => (pixel_to_spherical(u, v, &k)?, u, v),
        (None, Some([theta, phi])) => {
            let s = SphericalCoord::new(theta.to_radians(), phi.to_radians());
            let (u, v) = spherical_to_pixel(&s, &k)?;
            (s, u, v)
        }
        (None, None) => unreachable!("query group is required"),
    };
    let ray = pixel_to_ray(u, v, &k)?;
    let mut out = json!({
        "u": u,
        "v": v,
        "theta": s.theta,
        "phi": s.phi,
        "theta_deg": s.theta.to_degrees(),
        "phi_deg": s.phi.to_degrees(),
        "ray": [ray.x, ray.y, ray.z],
        "incidence_deg": ray.x.hypot(ray.y).atan2(ray.z).to_degrees(),
    });
    if let Some([t0, p0]) = a.tangent {
        let p = gnomonic_forward(&s, &TangentPoint::from_degrees(t0, p0))?;
        out["gnomonic"] = json!({ "x": p.x, "y": p.y });
    }
    print_json(&out);
    Ok(())
}

fn cmd_viewpoint(a: &ViewpointArgs) -> Result<()> {
    let t = Vec3::from(a.t);
    let adj = adjust_for_translation(&t)?;
    let (global, apparent) = match (a.orientation.q, a.orientation.qp) {
        (Some(q), _) => {
            let q = UnitQuaternion::from_array(q)?;
            (q, apparent_orientation(&q, &t)?)
        }
        (None, Some(qp)) => {
            let qp = UnitQuaternion::from_array(qp)?;
            (recover_global_orientation(&qp, &t)?, qp)
        }
        (None, None) => unreachable!("orientation group is required"),
    };
    let tv = adj.to_virtual(&t);
    print_json(&json!({
        "tangent_deg": [adj.tangent.theta0.to_degrees(), adj.tangent.phi0.to_degrees()],
        "r_adj": adj.r_adj.rows(),
        "q_global": global.canonical().to_array(),
        "q_apparent": apparent.canonical().to_array(),
        "t_virtual": [tv.x, tv.y, tv.z],
    }));
    Ok(())
}

fn image_name(frame_id: u64) -> String {
    format!("images/{frame_id:06}.png")
}

fn dataset_index(
    trajectory: &CameraTrajectory,
    k: &FisheyeIntrinsics,
    names: &[(u32, String)],
) -> DatasetIndex {
    DatasetIndex {
        intrinsics: Some("intrinsics.toml".into()),
        images: trajectory
            .frames()
            .iter()
            .map(|f| ImageEntry {
                id: f.frame_id,
                file_name: image_name(f.frame_id),
                width: k.width,
                height: k.height,
                sequence: "synth".into(),
                timestamp: f.timestamp,
            })
            .collect(),
        categories: names
            .iter()
            .map(|(id, name)| Category {
                id: *id,
                name: name.clone(),
            })
            .collect(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mut spec = SceneSpec::load(&a.scene)?;
    spec.seed = a.seed;
    let k = FisheyeIntrinsics::load(&a.intrinsics)?;
    let motion = match &a.motion {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str::<MotionSpec>(&text).map_err(|e| Error::Config(format!("motion spec: {e}")))?
        }
        None => MotionSpec::default(),
    };
    let trajectory = generate_trajectory(a.frames as usize, &motion)?;
    let scene = generate_scene(&spec, &trajectory.frames()[0].pose, &k)?;
    let models = spec.models()?;
    let out = &a.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    write_file(&out.join("intrinsics.toml"), &k.to_toml_string())?;
    write_file(&out.join("scene.toml"), &spec.to_toml_string())?;
    write_file(&out.join("objects.txt"), &scene.to_text())?;
    write_file(&out.join("trajectory.txt"), &trajectory.to_text())?;
    let mut catalog = Catalog::default();
    for class in &spec.classes {
        let points = format!("models/{}.xyz", class.id);
        let symmetry = format!("symmetry/{}.toml", class.id);
        write_file(&out.join(&points), &models[&class.id].to_text())?;
        write_file(&out.join(&symmetry), &class.symmetry()?.to_toml_string())?;
        catalog.classes.push(CatalogEntry {
            id: class.id,
            name: class.name.clone(),
            points,
            symmetry: Some(symmetry),
        });
    }
    write_file(&out.join("catalog.toml"), &catalog.to_toml_string())?;

    let records = build_annotations(&scene, &trajectory, &models, &k)?;
    let names: Vec<(u32, String)> = spec.classes.iter().map(|c| (c.id, c.name.clone())).collect();
    export_coco(
        &records,
        &dataset_index(&trajectory, &k, &names),
        out.join("annotations.json"),
    )?;

    if !a.no_images {
        std::fs::create_dir_all(out.join("images")).map_err(|e| Error::io(out.join("images"), e))?;
        let render = |frame: &crate::annotation::TrajectoryFrame| -> Result<()> {
            let img = render_synthetic_image(&scene, &frame.pose, &models, &k, &spec)?;
            save_png(&img.to_u8(), out.join(image_name(frame.frame_id)))
        };
        let frames = trajectory.frames();
        if a.workers == 1 {
            frames.iter().try_for_each(render)?;
        } else {
            run_in_pool(a.workers as usize, || frames.par_iter().try_for_each(render))?;
        }
    }
    println!(
        "{}: {} objects, {} frames, {} annotations",
        out.display(),
        scene.objects.len(),
        trajectory.len(),
        records.len()
    );
    Ok(())
}

fn load_residuals(path: &Path) -> Result<std::collections::BTreeMap<(u64, u64), f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::collections::BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || {
            Error::format(format!(
                "residuals line {}: expected `frame_id object_id residual`",
                lineno + 1
            ))
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(bad());
        }
        let frame: u64 = f[0].parse().map_err(|_| bad())?;
        let object: u64 = f[1].parse().map_err(|_| bad())?;
        let r: f64 = f[2].parse().map_err(|_| bad())?;
        if !(r.is_finite() && r >= 0.0) {
            return Err(bad());
        }
        out.insert((frame, object), r);
    }
    Ok(out)
}

fn cmd_annotate(a: &AnnotateArgs) -> Result<()> {
    let trajectory = CameraTrajectory::load(&a.trajectory)?;
    let scene = Scene::load(&a.objects)?;
    let catalog = Catalog::load(&a.catalog)?;
    let k = FisheyeIntrinsics::load(&a.intrinsics)?;
    let mut records = build_annotations(&scene, &trajectory, &catalog.models, &k)?;
    if let Some(path) = &a.residuals {
        let residuals = load_residuals(path)?;
        for r in &mut records {
            r.residual = residuals.get(&(r.frame_id, r.object_id)).copied().unwrap_or(0.0);
        }
    }
    let total = records.len();
    if let Some(max) = a.max_residual {
        records = filter_outliers(&records, max);
    }
    let names: Vec<(u32, String)> = catalog.names.into_iter().collect();
    create_parent(&a.out)?;
    export_coco(&records, &dataset_index(&trajectory, &k, &names), &a.out)?;
    println!(
        "{}: {} annotations ({} filtered)",
        a.out.display(),
        records.len(),
        total - records.len()
    );
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let (records, index) = import_coco(&a.annotations)?;
    let catalog = Catalog::load(&a.catalog)?;
    let mut dataset = EvalDataset {
        records: records
            .iter()
            .map(|r| {
                Ok(GroundTruthRecord {
                    frame_id: r.frame_id,
                    object_id: r.object_id,
                    class_id: r.class_id,
                    pose: r.pose,
                    roi: r.bbox.to_roi()?,
                })
            })
            .collect::<Result<_>>()?,
        models: catalog.models,
        symmetries: catalog.symmetries,
        class_names: catalog.names,
    };
    for c in index.categories {
        dataset.class_names.entry(c.id).or_insert(c.name);
    }
    let predictor: Box<dyn Predictor> = match a.predictor {
        PredictorKind::Perfect => Box::new(PerfectOraclePredictor),
        PredictorKind::Noisy => Box::new(NoisyOraclePredictor::new(
            a.sigma_t,
            a.sigma_r.to_radians(),
            a.seed,
        )?),
        PredictorKind::Constant => Box::new(ConstantPosePredictor::default()),
    };
    let config = HarnessConfig {
        translation_thresholds: a
            .thresholds
            .clone()
            .unwrap_or_else(|| DEFAULT_TRANSLATION_THRESHOLDS.to_vec()),
        orientation_thresholds_deg: a
            .orientation_thresholds
            .clone()
            .unwrap_or_else(|| DEFAULT_ORIENTATION_THRESHOLDS_DEG.to_vec()),
        max_adds_threshold: a.max_add_s,
        orientation_frame: match a.frame {
            FrameKind::Apparent => OrientationFrame::Apparent,
            FrameKind::Global => OrientationFrame::Global,
        },
        workers: a.workers as usize,
    };
    let report = run_harness(&dataset, predictor.as_ref(), &config)?;
    print!("{}", report.to_text());
    if let Some(path) = &a.out {
        create_parent(path)?;
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        report.write_csv(file)?;
    }
    Ok(())
}
