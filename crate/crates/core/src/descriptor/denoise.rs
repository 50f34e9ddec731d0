use nalgebra::Vector3;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::covariance;
use crate::kdtree::SpatialIndex;
use crate::preprocess::{benchmark_normal, sorted_eigen};

use super::GrooveSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseParams {
    /// Clusters with fewer points are dropped.
    pub min_cluster: usize,
    /// Linkage distance for Euclidean clustering.
    pub cluster_radius: f64,
    /// Width of the band along the cloud's hull boundary that counts as "edge".
    pub edge_margin: f64,
    /// A cluster is discarded when at least this fraction of its points lies in the edge band.
    pub edge_fraction: f64,
}

impl DenoiseParams {
    fn validate(&self) -> Result<()> {
        if !(self.cluster_radius > 0.0) {
            return Err(Error::InvalidParameter("cluster radius must be positive".into()));
        }
        if !(self.edge_margin >= 0.0) {
            return Err(Error::InvalidParameter("edge margin must be non-negative".into()));
        }
        Ok(())
    }
}

/// Removes small clusters and edge responses along the boundary of the scan.
///
/// The boundary is the convex hull of the whole cloud projected onto the plane orthogonal to
/// its dominant surface direction. Groove points within `edge_margin` of it are set aside, the
/// rest are grouped by Euclidean linkage at `cluster_radius`, and a cluster survives when it is
/// large enough and less than `edge_fraction` of it lies within `edge_margin + cluster_radius`
/// of the boundary. Set-aside points come back only when they lie within `edge_margin + cluster_radius / 2`
/// of a survivor, so a groove running off the scan keeps its ends while the rim does not.
pub fn denoise_groove(set: &GrooveSet, cloud: &PointCloud, params: &DenoiseParams) -> Result<GrooveSet> {
    params.validate()?;
    if set.is_empty() {
        return Ok(set.clone());
    }
    for &i in &set.indices {
        cloud.check_index(i)?;
    }

    let frame = projection_frame(cloud);
    let project = |i: usize| {
        let p = cloud.point(i).coords;
        [p.dot(&frame.0), p.dot(&frame.1)]
    };
    let hull = if params.edge_margin > 0.0 {
        convex_hull_2d((0..cloud.len()).map(project).collect())
    } else {
        Vec::new()
    };
    let edge_distance = |i: usize| {
        if hull.len() >= 3 {
            distance_to_polygon(&hull, project(i))
        } else {
            f64::INFINITY
        }
    };
    let (interior, border): (Vec<usize>, Vec<usize>) =
        set.indices.iter().partition(|&&i| edge_distance(i) > params.edge_margin);

    let mut keep = Vec::with_capacity(set.len());
    if !interior.is_empty() {
        let band = params.edge_margin + params.cluster_radius;
        for cluster in euclidean_clusters(cloud, &interior, params.cluster_radius)? {
            if cluster.len() < params.min_cluster {
                continue;
            }
            let near = cluster.iter().filter(|&&i| edge_distance(i) <= band).count();
            if near as f64 >= params.edge_fraction * cluster.len() as f64 {
                continue;
            }
            keep.extend(cluster);
        }
    }
    if !keep.is_empty() && !border.is_empty() {
        let pts: Vec<_> = keep.iter().map(|&i| *cloud.point(i)).collect();
        let index = SpatialIndex::from_points(&pts)?;
        let reach = params.edge_margin + 0.5 * params.cluster_radius;
        keep.extend(
            border
                .into_iter()
                .filter(|&i| !index.within(cloud.point(i), reach).is_empty()),
        );
    }
    keep.sort_unstable();
    Ok(GrooveSet {
        indices: keep,
        threshold: set.threshold,
    })
}

/// Connected components of `members` under the "within `radius`" relation.
fn euclidean_clusters(cloud: &PointCloud, members: &[usize], radius: f64) -> Result<Vec<Vec<usize>>> {
    let pts: Vec<_> = members.iter().map(|&i| *cloud.point(i)).collect();
    let index = SpatialIndex::from_points(&pts)?;
    let mut label = vec![usize::MAX; pts.len()];
    let mut clusters = Vec::new();
    for seed in 0..pts.len() {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        label[seed] = id;
        let mut queue = vec![seed];
        let mut cluster = Vec::new();
        while let Some(k) = queue.pop() {
            cluster.push(members[k]);
            for j in index.within(&pts[k], radius) {
                if label[j] == usize::MAX {
                    label[j] = id;
                    queue.push(j);
                }
            }
        }
        cluster.sort_unstable();
        clusters.push(cluster);
    }
    Ok(clusters)
}

/// Two orthonormal vectors spanning the plane orthogonal to the cloud's main direction.
fn projection_frame(cloud: &PointCloud) -> (Vector3<f64>, Vector3<f64>) {
    let axis = match benchmark_normal(cloud) {
        Ok(b) => b.into_inner(),
        Err(_) => {
            let (_, cov, _) = covariance(cloud.points().iter());
            sorted_eigen(cov).1[0]
        }
    };
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = axis.cross(&helper).normalize();
    let v = axis.cross(&u);
    (u, v)
}

/// Convex hull (counter-clockwise, no repeated endpoint) by Andrew's monotone chain.
pub fn convex_hull_2d(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

fn distance_to_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let ab = [b[0] - a[0], b[1] - a[1]];
        let ap = [p[0] - a[0], p[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let dx = ap[0] - t * ab[0];
        let dy = ap[1] - t * ab[1];
        best = best.min((dx * dx + dy * dy).sqrt());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use nalgebra::Unit;

    fn plate(n: usize, pitch: f64) -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push(Point3::new(i as f64 * pitch, j as f64 * pitch, 0.0));
            }
        }
        let len = pts.len();
        PointCloud::new(pts)
            .unwrap()
            .set_normals(vec![Unit::new_normalize(Vector3::z()); len])
            .unwrap()
    }

    fn params(min_cluster: usize) -> DenoiseParams {
        DenoiseParams {
            min_cluster,
            cluster_radius: 2.0,
            edge_margin: 2.0,
            edge_fraction: 0.5,
        }
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let h = convex_hull_2d(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0], [0.5, 0.0]]);
        assert_eq!(h, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!((distance_to_polygon(&h, [0.5, 0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dense_interior_cluster_unchanged() {
        let cloud = plate(30, 1.0);
        let indices: Vec<usize> = (10..20).flat_map(|i| (10..20).map(move |j| i * 30 + j)).collect();
        let set = GrooveSet { indices: indices.clone(), threshold: 1.0 };
        assert_eq!(denoise_groove(&set, &cloud, &params(10)).unwrap().indices, indices);
    }

    #[test]
    fn small_cluster_removed() {
        let cloud = plate(30, 1.0);
        let set = GrooveSet {
            indices: vec![15 * 30 + 15, 15 * 30 + 16],
            threshold: 1.0,
        };
        assert!(denoise_groove(&set, &cloud, &params(10)).unwrap().is_empty());
    }

    #[test]
    fn edge_band_removed_groove_kept() {
        let cloud = plate(40, 1.0);
        // Groove strip across the plate along x at y in 18..22, plus a band along y = 0..1.
        let mut indices: Vec<usize> = (0..40).flat_map(|i| (18..22).map(move |j| i * 40 + j)).collect();
        let edge: Vec<usize> = (0..40).flat_map(|i| (0..2).map(move |j| i * 40 + j)).collect();
        let groove = indices.clone();
        indices.extend(&edge);
        indices.sort_unstable();
        let set = GrooveSet { indices, threshold: 1.0 };
        assert_eq!(denoise_groove(&set, &cloud, &params(10)).unwrap().indices, groove);
    }

    #[test]
    fn groove_joined_to_rim_is_separated() {
        let cloud = plate(40, 1.0);
        let groove: Vec<usize> = (0..40).flat_map(|i| (18..22).map(move |j| i * 40 + j)).collect();
        let on_rim = |i: usize, j: usize| i < 2 || j < 2 || i >= 38 || j >= 38;
        let mut indices: Vec<usize> = (0..40)
            .flat_map(|i| (0..40).filter(move |&j| on_rim(i, j)).map(move |j| i * 40 + j))
            .chain(groove.iter().copied())
            .collect();
        indices.sort_unstable();
        indices.dedup();
        let rim = indices.len() - groove.len();
        let set = GrooveSet { indices, threshold: 1.0 };
        let kept = denoise_groove(&set, &cloud, &params(10)).unwrap().indices;
        assert!(groove.iter().all(|i| kept.binary_search(i).is_ok()));
        assert!(kept.len() - groove.len() < rim / 10, "{} rim points kept", kept.len() - groove.len());
    }
}
