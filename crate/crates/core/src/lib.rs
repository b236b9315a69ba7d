//! Fisheye → sphere → tangent-plane geometry for 6D object pose work.
//!
//! The crate covers the equidistant fisheye model, spherical and gnomonic
//! mappings, the apparent-viewpoint orientation correction, virtual
//! perspective view generation, symmetry-aware pose metrics, COCO-style pose
//! annotation I/O and a synthetic scene generator used as ground truth.

// NaN-rejecting range checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annotation;
pub mod cli;
pub mod error;
pub mod fisheye;
pub mod geometry;
pub mod metrics;
pub mod remap;
pub mod scene;
pub mod sphere;
pub mod viewpoint;

pub use error::{Error, Result};
pub use fisheye::FisheyeIntrinsics;
pub use geometry::{Pose6D, RotationMatrix, UnitQuaternion, Vec3};
pub use remap::{ImageBuffer, RoiBox, SampleGrid, VirtualCamera};
pub use sphere::{SphericalCoord, TangentPlaneCoord, TangentPoint};
