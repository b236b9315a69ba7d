use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{
    adds_error, auc_adds, orientation_error_sym, threshold_table, translation_error, ModelPoints,
    SymmetrySpec, DEFAULT_MAX_ADDS_THRESHOLD, DEFAULT_ORIENTATION_THRESHOLDS_DEG,
    DEFAULT_TRANSLATION_THRESHOLDS,
};
use crate::error::{Error, Result};
use crate::geometry::{Pose6D, UnitQuaternion, Vec3};
use crate::remap::{run_in_pool, RoiBox};
use crate::viewpoint::{apparent_orientation, recover_global_orientation};

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthRecord {
    pub frame_id: u64,
    pub object_id: u64,
    pub class_id: u32,
    pub pose: Pose6D,
    pub roi: RoiBox,
}

impl GroundTruthRecord {
    fn key(&self) -> (u64, u64, u32) {
        (self.frame_id, self.object_id, self.class_id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRecord {
    pub frame_id: u64,
    pub object_id: u64,
    pub class_id: u32,
    /// Global (fisheye-frame) pose.
    pub pose: Pose6D,
    /// Orientation in the virtual camera frame centered on the predicted translation.
    pub apparent: UnitQuaternion,
    pub roi: RoiBox,
}

/// Stand-in for a learned pose regressor.
pub trait Predictor: Sync {
    fn name(&self) -> &str;
    fn predict(&self, gt: &GroundTruthRecord) -> Result<PredictionRecord>;
}

fn prediction(gt: &GroundTruthRecord, pose: Pose6D, apparent: UnitQuaternion) -> PredictionRecord {
    PredictionRecord {
        frame_id: gt.frame_id,
        object_id: gt.object_id,
        class_id: gt.class_id,
        pose,
        apparent,
        roi: gt.roi,
    }
}

/// Returns the ground truth unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct PerfectOraclePredictor;

impl Predictor for PerfectOraclePredictor {
    fn name(&self) -> &str {
        "perfect"
    }

    fn predict(&self, gt: &GroundTruthRecord) -> Result<PredictionRecord> {
        let apparent = apparent_orientation(&gt.pose.rotation, &gt.pose.translation)?;
        Ok(prediction(gt, gt.pose, apparent))
    }
}

/// Perturbs the ground truth with isotropic Gaussian translation noise
/// (`sigma_t` meters per axis) and a Gaussian rotation vector applied to the
/// apparent orientation (`sigma_r` radians per axis). The global orientation
/// is then recovered from the noisy translation, as a regressor would.
#[derive(Clone, Copy, Debug)]
pub struct NoisyOraclePredictor {
    pub sigma_t: f64,
    pub sigma_r: f64,
    pub seed: u64,
    normal_t: Normal<f64>,
    normal_r: Normal<f64>,
}

impl NoisyOraclePredictor {
    pub fn new(sigma_t: f64, sigma_r: f64, seed: u64) -> Result<Self> {
        let normal =
            |s: f64| Normal::new(0.0, s).map_err(|_| Error::invalid(format!("invalid noise sigma {s}")));
        if sigma_t < 0.0 || sigma_r < 0.0 {
            return Err(Error::invalid("noise sigmas must be non-negative"));
        }
        Ok(Self {
            sigma_t,
            sigma_r,
            seed,
            normal_t: normal(sigma_t)?,
            normal_r: normal(sigma_r)?,
        })
    }

    /// Per-record generator; independent of evaluation order.
    fn rng_for(&self, gt: &GroundTruthRecord) -> ChaCha8Rng {
        let mut h = splitmix(self.seed);
        for v in [gt.frame_id, gt.object_id, gt.class_id as u64] {
            h = splitmix(h ^ v);
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Predictor for NoisyOraclePredictor {
    fn name(&self) -> &str {
        "noisy"
    }

    fn predict(&self, gt: &GroundTruthRecord) -> Result<PredictionRecord> {
        let mut rng = self.rng_for(gt);
        let mut draw3 =
            |n: &Normal<f64>| Vec3::new(n.sample(&mut rng), n.sample(&mut rng), n.sample(&mut rng));
        let dt = draw3(&self.normal_t);
        let omega = draw3(&self.normal_r);
        let t_hat = gt.pose.translation + dt;
        let apparent_gt = apparent_orientation(&gt.pose.rotation, &gt.pose.translation)?;
        let apparent = apparent_gt.compose(&UnitQuaternion::from_rotation_vector(&omega));
        let rotation = recover_global_orientation(&apparent, &t_hat)?;
        Ok(prediction(gt, Pose6D::new(rotation, t_hat)?, apparent))
    }
}

/// Predicts the same pose for every object.
#[derive(Clone, Copy, Debug)]
pub struct ConstantPosePredictor {
    pub pose: Pose6D,
}

impl Default for ConstantPosePredictor {
    fn default() -> Self {
        Self {
            pose: Pose6D {
                rotation: UnitQuaternion::identity(),
                translation: Vec3::new(0.0, 0.0, 1.0),
            },
        }
    }
}

impl Predictor for ConstantPosePredictor {
    fn name(&self) -> &str {
        "constant"
    }

    fn predict(&self, gt: &GroundTruthRecord) -> Result<PredictionRecord> {
        let apparent = apparent_orientation(&self.pose.rotation, &self.pose.translation)?;
        Ok(prediction(gt, self.pose, apparent))
    }
}

/// Which orientation the orientation table compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OrientationFrame {
    /// Apparent orientation `R_p` (what a regressor outputs).
    #[default]
    Apparent,
    /// Recovered global orientation `R`.
    Global,
}

#[derive(Clone, Debug)]
pub struct HarnessConfig {
    /// Meters, strictly ascending.
    pub translation_thresholds: Vec<f64>,
    /// Degrees, strictly ascending.
    pub orientation_thresholds_deg: Vec<f64>,
    pub max_adds_threshold: f64,
    pub orientation_frame: OrientationFrame,
    pub workers: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            translation_thresholds: DEFAULT_TRANSLATION_THRESHOLDS.to_vec(),
            orientation_thresholds_deg: DEFAULT_ORIENTATION_THRESHOLDS_DEG.to_vec(),
            max_adds_threshold: DEFAULT_MAX_ADDS_THRESHOLD,
            orientation_frame: OrientationFrame::Apparent,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvalDataset {
    pub records: Vec<GroundTruthRecord>,
    pub models: BTreeMap<u32, ModelPoints>,
    pub symmetries: BTreeMap<u32, SymmetrySpec>,
    /// Display names; classes without a name print as their id.
    pub class_names: BTreeMap<u32, String>,
}

impl EvalDataset {
    fn class_label(&self, class_id: u32) -> String {
        self.class_names
            .get(&class_id)
            .cloned()
            .unwrap_or_else(|| class_id.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub class: String,
    pub count: usize,
    /// Percent under each translation threshold.
    pub translation: Vec<f64>,
    /// Percent under each orientation threshold.
    pub orientation: Vec<f64>,
    pub adds_auc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub predictor: String,
    pub translation_thresholds: Vec<f64>,
    pub orientation_thresholds_deg: Vec<f64>,
    pub max_adds_threshold: f64,
    pub orientation_frame: OrientationFrame,
    /// One row per class (ascending id), then `ALL`.
    pub rows: Vec<ReportRow>,
}

struct Scored {
    class_id: u32,
    translation: f64,
    orientation_deg: f64,
    adds: f64,
}

pub fn run_harness(
    dataset: &EvalDataset,
    predictor: &dyn Predictor,
    config: &HarnessConfig,
) -> Result<Report> {
    if dataset.records.is_empty() {
        return Err(Error::invalid("dataset has no records"));
    }
    if config.workers == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    for rec in &dataset.records {
        if !dataset.models.contains_key(&rec.class_id) {
            return Err(Error::Config(format!(
                "no model points for class {}",
                rec.class_id
            )));
        }
        if !dataset.symmetries.contains_key(&rec.class_id) {
            return Err(Error::Config(format!(
                "no symmetry spec for class {}",
                rec.class_id
            )));
        }
    }
    // validate thresholds before the expensive part
    threshold_table(&[0.0], &config.translation_thresholds)?;
    threshold_table(&[0.0], &config.orientation_thresholds_deg)?;
    auc_adds(&[0.0], config.max_adds_threshold)?;

    let mut records: Vec<&GroundTruthRecord> = dataset.records.iter().collect();
    records.sort_by_key(|r| r.key());

    let score = |gt: &GroundTruthRecord| -> Result<Scored> {
        let pred = predictor.predict(gt)?;
        let sym = &dataset.symmetries[&gt.class_id];
        let orientation = match config.orientation_frame {
            OrientationFrame::Apparent => {
                let gt_apparent = apparent_orientation(&gt.pose.rotation, &gt.pose.translation)?;
                orientation_error_sym(&pred.apparent, &gt_apparent, sym)
            }
            OrientationFrame::Global => orientation_error_sym(&pred.pose.rotation, &gt.pose.rotation, sym),
        };
        Ok(Scored {
            class_id: gt.class_id,
            translation: translation_error(&pred.pose.translation, &gt.pose.translation),
            orientation_deg: orientation.to_degrees(),
            adds: adds_error(&pred.pose, &gt.pose, &dataset.models[&gt.class_id]),
        })
    };
    let scored: Vec<Scored> = if config.workers == 1 {
        records.iter().map(|r| score(r)).collect::<Result<_>>()?
    } else {
        run_in_pool(config.workers, || {
            records.par_iter().map(|r| score(r)).collect::<Result<Vec<_>>>()
        })?
    };

    let mut by_class: BTreeMap<u32, Vec<&Scored>> = BTreeMap::new();
    for s in &scored {
        by_class.entry(s.class_id).or_default().push(s);
    }
    let row = |label: String, items: &[&Scored]| -> Result<ReportRow> {
        let t: Vec<f64> = items.iter().map(|s| s.translation).collect();
        let o: Vec<f64> = items.iter().map(|s| s.orientation_deg).collect();
        let a: Vec<f64> = items.iter().map(|s| s.adds).collect();
        Ok(ReportRow {
            class: label,
            count: items.len(),
            translation: threshold_table(&t, &config.translation_thresholds)?,
            orientation: threshold_table(&o, &config.orientation_thresholds_deg)?,
            adds_auc: auc_adds(&a, config.max_adds_threshold)?,
        })
    };
    let mut rows = Vec::with_capacity(by_class.len() + 1);
    for (class_id, items) in &by_class {
        rows.push(row(dataset.class_label(*class_id), items)?);
    }
    let all: Vec<&Scored> = scored.iter().collect();
    rows.push(row("ALL".into(), &all)?);

    Ok(Report {
        predictor: predictor.name().to_string(),
        translation_thresholds: config.translation_thresholds.clone(),
        orientation_thresholds_deg: config.orientation_thresholds_deg.clone(),
        max_adds_threshold: config.max_adds_threshold,
        orientation_frame: config.orientation_frame,
        rows,
    })
}

impl Report {
    pub fn row(&self, class: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.class == class)
    }

    /// CSV with columns `class,metric,threshold,value`. Translation thresholds
    /// are in meters, orientation thresholds in degrees, and the ADD-S row
    /// carries the curve's maximum threshold in meters.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::format(format!("writing report: {e}"));
        w.write_record(["class", "metric", "threshold", "value"])
            .map_err(csv_err)?;
        for row in &self.rows {
            for (t, v) in self.translation_thresholds.iter().zip(&row.translation) {
                w.write_record([
                    row.class.as_str(),
                    "translation",
                    &t.to_string(),
                    &format!("{v:.4}"),
                ])
                .map_err(csv_err)?;
            }
            for (t, v) in self.orientation_thresholds_deg.iter().zip(&row.orientation) {
                w.write_record([
                    row.class.as_str(),
                    "orientation",
                    &t.to_string(),
                    &format!("{v:.4}"),
                ])
                .map_err(csv_err)?;
            }
            w.write_record([
                row.class.as_str(),
                "add_s_auc",
                &self.max_adds_threshold.to_string(),
                &format!("{:.4}", row.adds_auc),
            ])
            .map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::format(format!("writing report: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("utf8 csv")
    }

    /// Aligned text tables: translation, orientation and ADD-S AUC.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let width = self.rows.iter().map(|r| r.class.len()).max().unwrap_or(5).max(5);
        let frame = match self.orientation_frame {
            OrientationFrame::Apparent => "apparent",
            OrientationFrame::Global => "global",
        };
        let table =
            |s: &mut String, title: &str, heads: Vec<String>, vals: &dyn Fn(&ReportRow) -> Vec<f64>| {
                let _ = writeln!(s, "{title}");
                let _ = write!(s, "{:<width$}", "class");
                for h in &heads {
                    let _ = write!(s, " {h:>9}");
                }
                let _ = writeln!(s, " {:>7}", "n");
                for row in &self.rows {
                    let _ = write!(s, "{:<width$}", row.class);
                    for v in vals(row) {
                        let _ = write!(s, " {v:>9.2}");
                    }
                    let _ = writeln!(s, " {:>7}", row.count);
                }
                let _ = writeln!(s);
            };
        table(
            &mut s,
            &format!("Translation predictions under threshold (%) [{}]", self.predictor),
            self.translation_thresholds
                .iter()
                .map(|t| format!("<{}cm", fmt_num(t * 100.0)))
                .collect(),
            &|r| r.translation.clone(),
        );
        table(
            &mut s,
            &format!("Orientation predictions under threshold (%) [{frame}]"),
            self.orientation_thresholds_deg
                .iter()
                .map(|t| format!("<{}deg", fmt_num(*t)))
                .collect(),
            &|r| r.orientation.clone(),
        );
        table(
            &mut s,
            &format!("ADD-S AUC (max {} m)", fmt_num(self.max_adds_threshold)),
            vec!["AUC".into()],
            &|r| vec![r.adds_auc],
        );
        s
    }
}

fn fmt_num(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    format!("{r}")
}
