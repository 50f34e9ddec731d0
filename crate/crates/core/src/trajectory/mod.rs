//! From a detected groove point set to an ordered 6-DOF welding trajectory.
//!
//! The groove is projected onto its principal axis and cut into equal-width slabs. Each
//! non-empty slab yields one waypoint: the geometric median of its points as the position and
//! the normalized sum of its point normals as the orientation.

mod median;

use std::fmt::Write as _;

use nalgebra::{Unit, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::descriptor::GrooveSet;
use crate::error::{Error, Result};
use crate::geometry::{covariance, Point3, UnitVector3};
use crate::preprocess::sorted_eigen;

pub use median::{geometric_median, sum_of_distances, GdParams, MedianResult};

pub const DEFAULT_SEGMENTS: usize = 55;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrooveDirection {
    pub axis: UnitVector3,
    /// Centroid of the groove points.
    pub origin: Point3,
}

impl GrooveDirection {
    /// Projection parameter of `p` along the axis.
    pub fn project(&self, p: &Point3) -> f64 {
        (p - self.origin).dot(&self.axis)
    }
}

/// Principal axis of the groove points, signed by the lexicographic rule
/// (+x, then +y, then +z).
pub fn estimate_direction(cloud: &PointCloud, groove: &GrooveSet) -> Result<GrooveDirection> {
    if groove.len() < 2 {
        return Err(Error::GrooveTooShort);
    }
    for &i in &groove.indices {
        cloud.check_index(i)?;
    }
    let (origin, cov, _) = covariance(groove.indices.iter().map(|&i| cloud.point(i)));
    let (values, vectors) = sorted_eigen(cov);
    if !(values[2] > 0.0) {
        return Err(Error::GrooveTooShort);
    }
    if values[2] - values[1] < 1e-9 * values[2] {
        return Err(Error::NoDominantDirection);
    }
    let mut axis = vectors[2];
    const TIE: f64 = 1e-12;
    let sign = axis
        .iter()
        .find(|c| c.abs() > TIE)
        .map_or(1.0, |c| c.signum());
    axis *= sign;
    Ok(GrooveDirection {
        axis: Unit::new_normalize(axis),
        origin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub ordinal: usize,
    pub point_indices: Vec<usize>,
    /// Half-open projection interval `[t_low, t_high)` along the axis.
    pub span: (f64, f64),
}

/// Splits the groove into `n_segments` equal-width slabs along `direction`.
///
/// Empty slabs are dropped. A point lying exactly on an interior boundary belongs to the slab
/// on its right.
pub fn segment_groove(
    cloud: &PointCloud,
    groove: &GrooveSet,
    direction: &GrooveDirection,
    n_segments: usize,
) -> Result<Vec<Segment>> {
    if n_segments == 0 {
        return Err(Error::InvalidParameter("segment count must be at least 1".into()));
    }
    if groove.is_empty() {
        return Err(Error::EmptyGroove);
    }
    for &i in &groove.indices {
        cloud.check_index(i)?;
    }
    let ts: Vec<f64> = groove.indices.iter().map(|&i| direction.project(cloud.point(i))).collect();
    let t_min = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (t_max - t_min) / n_segments as f64;
    let low = |k: usize| if k == 0 { t_min } else { t_min + k as f64 * width };
    let high = |k: usize| if k + 1 == n_segments { t_max.next_up() } else { low(k + 1) };

    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n_segments];
    for (&i, &t) in groove.indices.iter().zip(&ts) {
        let mut k = if width > 0.0 {
            (((t - t_min) / width).floor() as usize).min(n_segments - 1)
        } else {
            0
        };
        while k + 1 < n_segments && t >= low(k + 1) {
            k += 1;
        }
        while k > 0 && t < low(k) {
            k -= 1;
        }
        buckets[k].push(i);
    }
    let mut segments = Vec::with_capacity(n_segments);
    for (k, mut members) in buckets.into_iter().enumerate() {
        if members.is_empty() {
            log::warn!("segment {k} of {n_segments} is empty and yields no waypoint");
            continue;
        }
        members.sort_unstable();
        segments.push(Segment {
            ordinal: k,
            point_indices: members,
            span: (low(k), high(k)),
        });
    }
    Ok(segments)
}

/// Geometric median of the segment's points.
pub fn waypoint_position(cloud: &PointCloud, segment: &Segment, gd: &GdParams) -> Result<MedianResult> {
    let pts: Vec<Point3> = segment.point_indices.iter().map(|&i| *cloud.point(i)).collect();
    geometric_median(&pts, gd)
}

/// Normalized sum of the segment's point normals, or `None` when the normals cancel.
pub fn waypoint_orientation(cloud: &PointCloud, segment: &Segment) -> Result<Option<UnitVector3>> {
    let normals = cloud.require_normals()?;
    let sum = segment
        .point_indices
        .iter()
        .fold(Vector3::zeros(), |acc, &i| acc + normals[i].into_inner());
    Ok(Unit::try_new(sum, 1e-12))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

/// Z-Y-X angles of a direction vector: `yaw = atan2(y, x)`, `pitch = asin(z)`, `roll = 0`.
pub fn orientation_to_euler(o: &UnitVector3) -> EulerAngles {
    let yaw = if o.x * o.x + o.y * o.y < 1e-24 { 0.0 } else { o.y.atan2(o.x) };
    EulerAngles {
        roll: 0.0,
        pitch: o.z.clamp(-1.0, 1.0).asin(),
        yaw,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    /// Ordinal of the segment this waypoint came from.
    pub ordinal: usize,
    pub position: Point3,
    pub orientation: UnitVector3,
    pub euler: EulerAngles,
    pub converged: bool,
    /// Set when the segment's normals cancelled and the orientation was borrowed from a neighbor.
    pub orientation_inherited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    pub direction: GrooveDirection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub segments: usize,
    pub gd: GdParams,
    pub reverse: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            segments: DEFAULT_SEGMENTS,
            gd: GdParams::default(),
            reverse: false,
        }
    }
}

/// Direction estimate, segmentation, then one waypoint per non-empty segment.
pub fn generate_trajectory(cloud: &PointCloud, groove: &GrooveSet, config: &TrajectoryConfig) -> Result<Trajectory> {
    if groove.is_empty() {
        return Err(Error::EmptyGroove);
    }
    config.gd.validate()?;
    cloud.require_normals()?;
    let direction = estimate_direction(cloud, groove)?;
    let segments = segment_groove(cloud, groove, &direction, config.segments)?;
    if segments.len() < 2 {
        return Err(Error::GrooveTooShort);
    }
    let solved: Vec<(MedianResult, Option<UnitVector3>)> = segments
        .par_iter()
        .map(|s| -> Result<_> { Ok((waypoint_position(cloud, s, &config.gd)?, waypoint_orientation(cloud, s)?)) })
        .collect::<Result<_>>()?;

    let Some(first_valid) = solved.iter().find_map(|(_, o)| *o) else {
        return Err(Error::DegenerateBenchmark);
    };
    let mut previous = first_valid;
    let mut waypoints = Vec::with_capacity(segments.len());
    for (seg, (median, orientation)) in segments.iter().zip(solved) {
        let (orientation, inherited) = match orientation {
            Some(o) => (o, false),
            None => (previous, true),
        };
        previous = orientation;
        waypoints.push(Waypoint {
            ordinal: seg.ordinal,
            position: median.position,
            orientation,
            euler: orientation_to_euler(&orientation),
            converged: median.converged,
            orientation_inherited: inherited,
        });
    }
    let trajectory = Trajectory { waypoints, direction };
    Ok(if config.reverse { trajectory.reversed() } else { trajectory })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WaypointRecord {
    ordinal: usize,
    position: [f64; 3],
    orientation: [f64; 3],
    euler: EulerAngles,
    converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrajectoryRecord {
    axis: [f64; 3],
    origin: [f64; 3],
    waypoints: Vec<WaypointRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Same waypoints in the opposite order, with the axis negated.
    pub fn reversed(&self) -> Self {
        let mut waypoints = self.waypoints.clone();
        waypoints.reverse();
        Self {
            waypoints,
            direction: GrooveDirection {
                axis: -self.direction.axis,
                origin: self.direction.origin,
            },
        }
    }

    /// Total length of the polyline through the waypoint positions.
    pub fn polyline_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1].position - w[0].position).norm())
            .sum()
    }

    /// One line per waypoint: `ordinal x y z ox oy oz roll pitch yaw converged`.
    pub fn to_ascii(&self) -> String {
        let mut s = String::from("# ordinal x y z ox oy oz roll pitch yaw converged\n");
        for w in &self.waypoints {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {} {} {} {} {} {}",
                w.ordinal,
                w.position.x,
                w.position.y,
                w.position.z,
                w.orientation.x,
                w.orientation.y,
                w.orientation.z,
                w.euler.roll,
                w.euler.pitch,
                w.euler.yaw,
                u8::from(w.converged)
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        let record = TrajectoryRecord {
            axis: self.direction.axis.into_inner().into(),
            origin: self.direction.origin.coords.into(),
            waypoints: self
                .waypoints
                .iter()
                .map(|w| WaypointRecord {
                    ordinal: w.ordinal,
                    position: w.position.coords.into(),
                    orientation: w.orientation.into_inner().into(),
                    euler: w.euler,
                    converged: w.converged,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&record).expect("trajectory serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: TrajectoryRecord =
            serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        let unit = |v: [f64; 3]| {
            Unit::try_new(Vector3::from(v), 1e-12).ok_or_else(|| Error::parse(0, "zero-length direction"))
        };
        let waypoints = record
            .waypoints
            .into_iter()
            .map(|w| {
                Ok(Waypoint {
                    ordinal: w.ordinal,
                    position: Point3::from(w.position),
                    orientation: unit(w.orientation)?,
                    euler: w.euler,
                    converged: w.converged,
                    orientation_inherited: false,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            waypoints,
            direction: GrooveDirection {
                axis: unit(record.axis)?,
                origin: Point3::from(record.origin),
            },
        })
    }
}
