//! Object symmetry groups and model point sets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{quaternion_distance, UnitQuaternion, Vec3};

/// Tolerance for group closure of the discrete symmetry set.
pub const CLOSURE_TOL: f64 = 1e-6;

/// Symmetry group of an object: a finite set of object-frame rotations,
/// optionally combined with full rotational symmetry about an axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrySpec {
    pub class_id: u32,
    discrete: Vec<UnitQuaternion>,
    continuous_axis: Option<Vec3>,
}

impl SymmetrySpec {
    pub fn trivial(class_id: u32) -> Self {
        Self {
            class_id,
            discrete: vec![UnitQuaternion::identity()],
            continuous_axis: None,
        }
    }

    /// Validates closure of `discrete` and adds the identity if missing.
    pub fn new(class_id: u32, discrete: Vec<UnitQuaternion>, continuous_axis: Option<Vec3>) -> Result<Self> {
        let mut elems: Vec<UnitQuaternion> = Vec::with_capacity(discrete.len() + 1);
        for q in std::iter::once(UnitQuaternion::identity()).chain(discrete) {
            if !elems.iter().any(|e| quaternion_distance(e, &q) <= CLOSURE_TOL) {
                elems.push(q);
            }
        }
        for a in &elems {
            for b in &elems {
                let ab = a.compose(b);
                if !elems.iter().any(|e| quaternion_distance(e, &ab) <= CLOSURE_TOL) {
                    return Err(Error::invalid(format!(
                        "symmetry set of class {class_id} is not closed under composition"
                    )));
                }
            }
        }
        let continuous_axis = match continuous_axis {
            Some(axis) => {
                let n = axis.norm();
                if !n.is_finite() || n < 1e-12 {
                    return Err(Error::invalid("continuous symmetry axis must be non-zero"));
                }
                Some(axis / n)
            }
            None => None,
        };
        Ok(Self {
            class_id,
            discrete: elems,
            continuous_axis,
        })
    }

    /// Cyclic group of order `n` about `axis`.
    pub fn cyclic(class_id: u32, axis: &Vec3, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("cyclic symmetry order must be positive"));
        }
        let elems = (0..n)
            .map(|k| UnitQuaternion::from_axis_angle(axis, std::f64::consts::TAU * k as f64 / n as f64))
            .collect::<Result<Vec<_>>>()?;
        Self::new(class_id, elems, None)
    }

    pub fn discrete(&self) -> &[UnitQuaternion] {
        &self.discrete
    }

    pub fn continuous_axis(&self) -> Option<&Vec3> {
        self.continuous_axis.as_ref()
    }

    pub fn is_trivial(&self) -> bool {
        self.discrete.len() == 1 && self.continuous_axis.is_none()
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
        let file: SymmetryFile =
            toml::from_str(text).map_err(|e| Error::format(format!("symmetry file: {e}")))?;
        let discrete = file
            .discrete
            .iter()
            .map(|q| UnitQuaternion::normalize(q[0], q[1], q[2], q[3]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            file.class_id,
            discrete,
            file.continuous_axis.map(|a| Vec3::new(a[0], a[1], a[2])),
        )
    }

    pub fn to_toml_string(&self) -> String {
        let file = SymmetryFile {
            class_id: self.class_id,
            discrete: self.discrete.iter().map(|q| q.to_array()).collect(),
            continuous_axis: self.continuous_axis.map(|a| [a.x, a.y, a.z]),
        };
        toml::to_string(&file).expect("symmetry serialize")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymmetryFile {
    class_id: u32,
    #[serde(default)]
    discrete: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    continuous_axis: Option<[f64; 3]>,
}

/// Object-frame model points in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelPoints {
    pub class_id: u32,
    points: Vec<Vec3>,
}

impl ModelPoints {
    pub fn new(class_id: u32, points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid(format!("model of class {class_id} has no points")));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid(format!(
                "model of class {class_id} has non-finite points"
            )));
        }
        Ok(Self { class_id, points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Parses `x y z` lines; blank lines and `#` comments are skipped.
    pub fn parse(class_id: u32, text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format(format!("model points line {}: {e}", lineno + 1)))?;
            if vals.len() != 3 {
                return Err(Error::format(format!(
                    "model points line {}: expected 3 values, found {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            points.push(Vec3::new(vals[0], vals[1], vals[2]));
        }
        Self::new(class_id, points)
    }

    pub fn load(class_id: u32, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(class_id, &text)
    }

    pub fn to_text(&self) -> String {
        self.points
            .iter()
            .map(|p| format!("{:?} {:?} {:?}\n", p.x, p.y, p.z))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
