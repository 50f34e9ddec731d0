//! Groove feature histograms and the per-point surface variation descriptor.
//!
//! For each point, the *local* histogram holds the angles between its normal and each
//! neighbor's normal; the *global* histogram holds the angles between the cloud's benchmark
//! normal and every normal in the neighborhood, center included. The descriptor combines the
//! population variances of both histograms as `sqrt(σl² + σg²)`.

mod denoise;
mod threshold;

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::UnitVector3;
use crate::kdtree::{NeighborSet, SpatialIndex};
use crate::preprocess::benchmark_normal;

pub use denoise::{convex_hull_2d, denoise_groove, DenoiseParams};
pub use threshold::{extract_groove, otsu_threshold, GrooveSet};

/// Minimum neighbor count for a meaningful descriptor.
pub const MIN_NEIGHBORS: usize = 3;

/// A set of included angles in radians, each in `[0, π]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AngleSet {
    pub angles: Vec<f64>,
}

impl AngleSet {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Included angle between two unit vectors.
pub fn pair_angle(u: &UnitVector3, v: &UnitVector3) -> f64 {
    u.dot(v).clamp(-1.0, 1.0).acos()
}

/// Angles between the center normal and each neighbor normal, in neighbor order.
pub fn local_gfh(cloud: &PointCloud, neighbors: &NeighborSet) -> Result<AngleSet> {
    let normals = cloud.require_normals()?;
    Ok(local_angles(normals, neighbors.center_index, &neighbors.neighbor_indices))
}

/// Angles between `benchmark` and the center normal, then each neighbor normal.
pub fn global_gfh(cloud: &PointCloud, neighbors: &NeighborSet, benchmark: &UnitVector3) -> Result<AngleSet> {
    let normals = cloud.require_normals()?;
    Ok(global_angles(normals, neighbors.center_index, &neighbors.neighbor_indices, benchmark))
}

fn local_angles(normals: &[UnitVector3], center: usize, neighbors: &[usize]) -> AngleSet {
    let uc = &normals[center];
    AngleSet {
        angles: neighbors.iter().map(|&j| pair_angle(uc, &normals[j])).collect(),
    }
}

fn global_angles(normals: &[UnitVector3], center: usize, neighbors: &[usize], benchmark: &UnitVector3) -> AngleSet {
    AngleSet {
        angles: std::iter::once(center)
            .chain(neighbors.iter().copied())
            .map(|k| pair_angle(benchmark, &normals[k]))
            .collect(),
    }
}

/// Population variance of the angles, or `None` for an empty set.
pub fn histogram_variance(set: &AngleSet) -> Option<f64> {
    if set.is_empty() {
        return None;
    }
    // Shifting by the first angle keeps identical angles at exactly zero variance.
    let n = set.len() as f64;
    let a0 = set.angles[0];
    let mean = set.angles.iter().map(|a| a - a0).sum::<f64>() / n;
    Some(set.angles.iter().map(|a| (a - a0 - mean) * (a - a0 - mean)).sum::<f64>() / n)
}

/// Combines the two histogram variances.
pub fn descriptor(sigma_local: f64, sigma_global: f64) -> f64 {
    sigma_local.hypot(sigma_global)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationRecord {
    pub sigma_local: f64,
    pub sigma_global: f64,
    pub descriptor: f64,
    /// Set when the point had fewer than [`MIN_NEIGHBORS`] neighbors; all values are then 0.
    pub insufficient: bool,
    pub neighbor_count: usize,
}

/// One [`VariationRecord`] per cloud point.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationMap {
    pub records: Vec<VariationRecord>,
    pub radius: f64,
    pub benchmark: UnitVector3,
    /// Number of angle evaluations performed while building the map.
    pub angle_evaluations: u64,
}

impl VariationMap {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn descriptors(&self) -> impl Iterator<Item = f64> + Clone + '_ {
        self.records.iter().map(|r| r.descriptor)
    }

    pub fn max_descriptor(&self) -> f64 {
        self.descriptors().fold(0.0, f64::max)
    }

    /// ASCII table: `index x y z sigma_local sigma_global descriptor flag`, one row per point.
    pub fn to_table(&self, cloud: &PointCloud) -> String {
        let mut s = String::with_capacity(self.len() * 120);
        s.push_str("# index x y z sigma_local sigma_global descriptor insufficient\n");
        for (i, (r, p)) in self.records.iter().zip(cloud.points()).enumerate() {
            let _ = writeln!(
                s,
                "{i} {} {} {} {} {} {} {}",
                p.x,
                p.y,
                p.z,
                r.sigma_local,
                r.sigma_global,
                r.descriptor,
                u8::from(r.insufficient)
            );
        }
        s
    }
}

/// Computes the surface variation descriptor of every point at neighborhood radius `r`.
///
/// The benchmark normal is taken over the whole cloud.
pub fn variation_map(cloud: &PointCloud, r: f64) -> Result<VariationMap> {
    let index = SpatialIndex::build(cloud)?;
    variation_map_with_index(cloud, &index, r)
}

pub fn variation_map_with_index(cloud: &PointCloud, index: &SpatialIndex, r: f64) -> Result<VariationMap> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("GFH radius must be positive, got {r}")));
    }
    let normals = cloud.require_normals()?;
    let benchmark = benchmark_normal(cloud)?;
    let per_point: Vec<(VariationRecord, u64)> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let n = index.radius_neighbors(i, r).expect("index and radius validated");
            point_record(normals, &n, &benchmark)
        })
        .collect();
    let angle_evaluations = per_point.iter().map(|(_, c)| c).sum();
    Ok(VariationMap {
        records: per_point.into_iter().map(|(rec, _)| rec).collect(),
        radius: r,
        benchmark,
        angle_evaluations,
    })
}

fn point_record(normals: &[UnitVector3], n: &NeighborSet, benchmark: &UnitVector3) -> (VariationRecord, u64) {
    let local = local_angles(normals, n.center_index, &n.neighbor_indices);
    let global = global_angles(normals, n.center_index, &n.neighbor_indices, benchmark);
    let evaluations = (local.len() + global.len()) as u64;
    if n.len() < MIN_NEIGHBORS {
        let rec = VariationRecord {
            sigma_local: 0.0,
            sigma_global: 0.0,
            descriptor: 0.0,
            insufficient: true,
            neighbor_count: n.len(),
        };
        return (rec, evaluations);
    }
    let sigma_local = histogram_variance(&local).unwrap_or(0.0);
    let sigma_global = histogram_variance(&global).unwrap_or(0.0);
    let rec = VariationRecord {
        sigma_local,
        sigma_global,
        descriptor: descriptor(sigma_local, sigma_global),
        insufficient: false,
        neighbor_count: n.len(),
    };
    (rec, evaluations)
}
