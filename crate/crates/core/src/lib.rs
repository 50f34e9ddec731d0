//! Detection of V-type welding grooves on workpiece point clouds and generation of 6-DOF
//! welding trajectories.
//!
//! The pipeline smooths a raw scan, estimates oriented normals, scores every point with an
//! angular surface-variation descriptor, thresholds and denoises the result into a groove
//! point set, and turns that set into ordered waypoints (geometric-median positions, averaged
//! normal orientations). Synthetic workpieces with exact labels and an evaluation harness are
//! included.

// Negated comparisons are how NaN parameters get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod config;
pub mod descriptor;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod kdtree;
pub mod pipeline;
pub mod preprocess;
pub mod synth;
pub mod trajectory;

#[doc(hidden)]
pub mod cli;

pub use cloud::PointCloud;
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use geometry::{Point3, UnitVector3};
