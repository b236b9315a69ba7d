use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fishpose::annotation::import_coco;
use fishpose::remap::load_png;
use fishpose::FisheyeIntrinsics;

fn fishpose(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fishpose"))
        .args(args)
        .output()
        .expect("run fishpose")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SCENE: &str = r#"
seed = 3
supersample = 1
[background]
kind = "checkerboard"
cell = 0.3
plane_y = 1.2
light = 200.0
dark = 60.0
sky = 20.0
[[classes]]
id = 1
name = "ring"
shape = { kind = "ring", radius = 0.1, points = 32 }
[[classes]]
id = 2
name = "handle"
shape = { kind = "handle", long = 0.3, short = 0.1, points = 8 }
[sampling]
count = 4
classes = [1, 2]
distance = [1.0, 2.5]
elevation_deg = [-20.0, 50.0]
azimuth_deg = [-70.0, 70.0]
"#;

const ORBIT: &str = r#"
kind = "orbit"
center = [0.0, 0.3, 1.5]
radius = 1.5
height = -0.1
start_deg = 0.0
sweep_deg = 20.0
"#;

fn synth(dir: &Path, seed: &str, frames: &str, workers: &str, out: &str) -> Output {
    let k = dir.join("k.toml");
    if !k.exists() {
        FisheyeIntrinsics::centered(160.0, 320, 320)
            .unwrap()
            .save(&k)
            .unwrap();
        fs::write(dir.join("scene.toml"), SCENE).unwrap();
        fs::write(dir.join("orbit.toml"), ORBIT).unwrap();
    }
    fishpose(&[
        "synth",
        "--scene",
        p(&dir.join("scene.toml")),
        "--intrinsics",
        p(&k),
        "--out",
        p(&dir.join(out)),
        "--seed",
        seed,
        "--frames",
        frames,
        "--motion",
        p(&dir.join("orbit.toml")),
        "--workers",
        workers,
    ])
}

#[test]
fn synth_annotate_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = synth(d, "5", "3", "2", "data");
    assert!(o.status.success(), "{}", stderr(&o));
    let data = d.join("data");
    for f in [
        "intrinsics.toml",
        "catalog.toml",
        "annotations.json",
        "trajectory.txt",
        "objects.txt",
        "images/000000.png",
    ] {
        assert!(data.join(f).exists(), "{f} missing");
    }
    let (records, index) = import_coco(data.join("annotations.json")).unwrap();
    assert!(!records.is_empty());
    assert_eq!(index.images.len(), 3);
    index.check_files(&data).unwrap();
    let img = load_png(data.join("images/000001.png")).unwrap();
    assert_eq!((img.width(), img.height()), (320, 320));

    // same seed, different worker count: identical bytes
    let o = synth(d, "5", "3", "1", "again");
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["annotations.json", "images/000002.png", "objects.txt"] {
        assert_eq!(
            fs::read(data.join(f)).unwrap(),
            fs::read(d.join("again").join(f)).unwrap(),
            "{f} differs"
        );
    }

    // re-annotate from the written trajectory and world poses
    let out = d.join("re.json");
    let o = fishpose(&[
        "annotate",
        "--trajectory",
        p(&data.join("trajectory.txt")),
        "--objects",
        p(&data.join("objects.txt")),
        "--catalog",
        p(&data.join("catalog.toml")),
        "--intrinsics",
        p(&data.join("intrinsics.toml")),
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (re, _) = import_coco(&out).unwrap();
    assert_eq!(re, records);

    let csv = d.join("report.csv");
    let o = fishpose(&[
        "eval",
        "--annotations",
        p(&data.join("annotations.json")),
        "--catalog",
        p(&data.join("catalog.toml")),
        "--predictor",
        "perfect",
        "--seed",
        "1",
        "--out",
        p(&csv),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("class,metric,threshold,value"));
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",100.0000"), "{line}");
    }

    let noisy = |seed: &str| {
        let o = fishpose(&[
            "eval",
            "--annotations",
            p(&data.join("annotations.json")),
            "--catalog",
            p(&data.join("catalog.toml")),
            "--predictor",
            "noisy",
            "--seed",
            seed,
            "--frame",
            "global",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    assert_eq!(noisy("9"), noisy("9"));
}

#[test]
fn synth_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = fishpose(&[
        "synth",
        "--scene",
        "s.toml",
        "--intrinsics",
        "k.toml",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn sphere_and_viewpoint_queries() {
    let dir = tempfile::tempdir().unwrap();
    let k = dir.path().join("k.toml");
    FisheyeIntrinsics::centered(300.0, 800, 600)
        .unwrap()
        .save(&k)
        .unwrap();

    let o = fishpose(&[
        "sphere",
        "--intrinsics",
        p(&k),
        "--spherical",
        "10,-20",
        "--tangent",
        "10,-20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["theta_deg"].as_f64().unwrap() - 10.0).abs() < 1e-9);
    assert!(v["gnomonic"]["x"].as_f64().unwrap().abs() < 1e-12);

    let o = fishpose(&["sphere", "--intrinsics", p(&k), "--pixel", "400,300"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["incidence_deg"].as_f64(), Some(0.0));

    let o = fishpose(&["viewpoint", "--t", "0.5,-0.2,1.5", "--q", "1,0,0,0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let tv: Vec<f64> = v["t_virtual"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let norm = (0.5f64 * 0.5 + 0.2 * 0.2 + 1.5 * 1.5).sqrt();
    assert!(tv[0].abs() < 1e-12 && tv[1].abs() < 1e-12 && (tv[2] - norm).abs() < 1e-12);
}

#[test]
fn remap_writes_view_and_mask() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let k = d.join("k.toml");
    FisheyeIntrinsics::centered(100.0, 320, 240)
        .unwrap()
        .save(&k)
        .unwrap();
    let src = fishpose::ImageBuffer::from_vec(320, 240, 1, (0..320 * 240).map(|i| (i % 256) as u8).collect())
        .unwrap();
    fishpose::remap::save_png(&src, d.join("in.png")).unwrap();
    let o = fishpose(&[
        "remap",
        "--intrinsics",
        p(&k),
        "--image",
        p(&d.join("in.png")),
        "--out",
        p(&d.join("view.png")),
        "--roi",
        "100,80,60,40",
        "--vcam",
        "64,48,60",
        "--mask",
        p(&d.join("mask.png")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(load_png(d.join("view.png")).unwrap().width(), 64);
    assert_eq!(load_png(d.join("mask.png")).unwrap().height(), 48);
}

#[test]
fn usage_and_domain_errors() {
    let o = fishpose(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fishpose(&["viewpoint", "--t", "0,0,0", "--q", "1,0,0,0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "));
    let o = fishpose(&["sphere", "--intrinsics", "/nonexistent/k.toml", "--pixel", "1,1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = fishpose(&[
        "remap",
        "--intrinsics",
        "k",
        "--image",
        "i",
        "--out",
        "o",
        "--tangent",
        "0,0",
        "--vcam",
        "0,10,5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
