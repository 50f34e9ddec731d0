use nalgebra::Unit;
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{covariance, Point3, UnitVector3};
use crate::kdtree::SpatialIndex;

use super::{smallest_is_ambiguous, sorted_eigen, DegeneracyReason, DiagnosticEntry, Diagnostics};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub search_radius: f64,
    /// Sensor origin; normals are flipped to face it.
    pub viewpoint: Point3,
}

impl NormalParams {
    pub fn new(search_radius: f64, viewpoint: Point3) -> Self {
        Self {
            search_radius,
            viewpoint,
        }
    }

    /// Uses the viewpoint stored in `cloud`.
    pub fn for_cloud(cloud: &PointCloud, search_radius: f64) -> Self {
        Self::new(search_radius, *cloud.viewpoint())
    }
}

/// Least-squares plane normal per point, oriented toward the viewpoint.
///
/// Points whose neighborhood is degenerate inherit the normal of the nearest point that has a
/// well-defined one, and are listed in the returned diagnostics.
pub fn estimate_normals(cloud: &PointCloud, params: &NormalParams) -> Result<(PointCloud, Diagnostics)> {
    let index = SpatialIndex::build(cloud)?;
    estimate_normals_with_index(cloud, &index, params)
}

pub fn estimate_normals_with_index(
    cloud: &PointCloud,
    index: &SpatialIndex,
    params: &NormalParams,
) -> Result<(PointCloud, Diagnostics)> {
    if !(params.search_radius > 0.0) || !params.search_radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "normal search radius must be positive, got {}",
            params.search_radius
        )));
    }
    let points = cloud.points();
    let raw: Vec<std::result::Result<UnitVector3, DegeneracyReason>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let n = index
                .radius_neighbors(i, params.search_radius)
                .expect("index and radius validated");
            plane_normal(points, i, &n.neighbor_indices, &params.viewpoint)
        })
        .collect();

    let valid: Vec<bool> = raw.iter().map(|r| r.is_ok()).collect();
    if !valid.iter().any(|&v| v) {
        return Err(Error::InvalidParameter(
            "no point has a well-defined normal at this search radius".into(),
        ));
    }
    let mut diagnostics = Diagnostics::default();
    let mut normals = Vec::with_capacity(raw.len());
    for (i, r) in raw.iter().enumerate() {
        match r {
            Ok(n) => normals.push(*n),
            Err(reason) => {
                diagnostics.entries.push(DiagnosticEntry { index: i, reason: *reason });
                let p = points[i];
                let (j, _) = index
                    .nearest_matching(&[p.x, p.y, p.z], |j| valid[j])
                    .expect("at least one valid normal");
                normals.push(*raw[j].as_ref().expect("valid"));
            }
        }
    }
    let out = cloud.clone().set_normals(normals)?;
    Ok((out, diagnostics))
}

fn plane_normal(
    points: &[Point3],
    center: usize,
    neighbors: &[usize],
    viewpoint: &Point3,
) -> std::result::Result<UnitVector3, DegeneracyReason> {
    if neighbors.len() < 3 {
        return Err(DegeneracyReason::TooFewNeighbors);
    }
    let members = std::iter::once(&points[center]).chain(neighbors.iter().map(|&j| &points[j]));
    let (_, cov, _) = covariance(members);
    let (values, vectors) = sorted_eigen(cov);
    if smallest_is_ambiguous(&values) {
        return Err(DegeneracyReason::Collinear);
    }
    let mut n = vectors[0];
    if n.dot(&(viewpoint - points[center])) < 0.0 {
        n = -n;
    }
    Ok(Unit::new_normalize(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn plane(n: usize, pitch: f64) -> Vec<Point3> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push(Point3::new(i as f64 * pitch, j as f64 * pitch, 0.0));
            }
        }
        pts
    }

    #[test]
    fn plane_normals_face_viewpoint() {
        for (vz, expected) in [(1.0, 1.0), (-1.0, -1.0)] {
            let cloud = PointCloud::with_viewpoint(plane(15, 0.001), Point3::new(0.0, 0.0, vz)).unwrap();
            let (out, diag) = estimate_normals(&cloud, &NormalParams::for_cloud(&cloud, 0.004)).unwrap();
            assert!(diag.is_empty());
            for n in out.normals().unwrap() {
                assert!((n.into_inner() - Vector3::new(0.0, 0.0, expected)).norm() < 1e-6);
                assert!((n.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_points_inherit_nearest_valid() {
        let mut pts = plane(10, 0.001);
        // A line of points sticking out, plus an isolated point.
        for k in 1..6 {
            pts.push(Point3::new(0.5, 0.5, k as f64 * 0.001));
        }
        pts.push(Point3::new(0.004, 0.004, 0.0035));
        let cloud = PointCloud::with_viewpoint(pts, Point3::new(0.0, 0.0, 1.0)).unwrap();
        let (out, diag) = estimate_normals(&cloud, &NormalParams::for_cloud(&cloud, 0.0025)).unwrap();
        assert!(diag.contains(100));
        for n in out.normals().unwrap() {
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn all_degenerate_is_error() {
        let pts: Vec<Point3> = (0..10).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let cloud = PointCloud::new(pts).unwrap();
        assert!(estimate_normals(&cloud, &NormalParams::for_cloud(&cloud, 3.5)).is_err());
    }
}
