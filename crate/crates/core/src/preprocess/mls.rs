use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::kdtree::SpatialIndex;

use super::{smallest_is_ambiguous, sorted_eigen, DegeneracyReason, DiagnosticEntry, Diagnostics};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlsParams {
    pub search_radius: f64,
    /// 1 (plane) or 2 (quadratic height field).
    pub polynomial_order: u8,
}

impl MlsParams {
    pub fn new(search_radius: f64, polynomial_order: u8) -> Self {
        Self {
            search_radius,
            polynomial_order,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.search_radius > 0.0) || !self.search_radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "MLS search radius must be positive, got {}",
                self.search_radius
            )));
        }
        if !(1..=2).contains(&self.polynomial_order) {
            return Err(Error::InvalidParameter(format!(
                "MLS polynomial order must be 1 or 2, got {}",
                self.polynomial_order
            )));
        }
        Ok(())
    }
}

/// Projects every point onto a locally weighted least-squares polynomial surface.
///
/// The local frame is the weighted principal plane of the radius neighborhood; heights above
/// it are fitted with Gaussian weights `exp(-d²/h²)`, `h = radius / 2`. Points with fewer than
/// three neighbors, or with a collinear neighborhood, pass through unchanged and are reported.
pub fn mls_smooth(cloud: &PointCloud, params: &MlsParams) -> Result<(PointCloud, Diagnostics)> {
    params.validate()?;
    let index = SpatialIndex::build(cloud)?;
    mls_smooth_with_index(cloud, &index, params)
}

pub fn mls_smooth_with_index(
    cloud: &PointCloud,
    index: &SpatialIndex,
    params: &MlsParams,
) -> Result<(PointCloud, Diagnostics)> {
    params.validate()?;
    let results: Vec<std::result::Result<Point3, DegeneracyReason>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let neighbors = index
                .radius_neighbors(i, params.search_radius)
                .expect("index and radius validated");
            project_point(cloud.points(), i, &neighbors.neighbor_indices, params)
        })
        .collect();

    let mut diagnostics = Diagnostics::default();
    let points = results
        .into_iter()
        .enumerate()
        .map(|(i, r)| match r {
            Ok(p) => p,
            Err(reason) => {
                diagnostics.entries.push(DiagnosticEntry { index: i, reason });
                *cloud.point(i)
            }
        })
        .collect();
    Ok((cloud.with_points(points), diagnostics))
}

fn project_point(
    points: &[Point3],
    center: usize,
    neighbors: &[usize],
    params: &MlsParams,
) -> std::result::Result<Point3, DegeneracyReason> {
    if neighbors.len() < 3 {
        return Err(DegeneracyReason::TooFewNeighbors);
    }
    let p = points[center];
    let h2 = (params.search_radius * 0.5).powi(2);
    // Center first, then neighbors in ascending index order.
    let members = std::iter::once(center).chain(neighbors.iter().copied());
    let weights: Vec<f64> = members
        .clone()
        .map(|j| (-(points[j] - p).norm_squared() / h2).exp())
        .collect();
    let wsum: f64 = weights.iter().sum();

    let mut mean = Vector3::zeros();
    for (j, w) in members.clone().zip(&weights) {
        mean += points[j].coords * *w;
    }
    mean /= wsum;
    let mut cov = Matrix3::zeros();
    for (j, w) in members.clone().zip(&weights) {
        let d = points[j].coords - mean;
        cov += d * d.transpose() * *w;
    }
    let (values, vectors) = sorted_eigen(cov);
    if smallest_is_ambiguous(&values) {
        return Err(DegeneracyReason::Collinear);
    }
    let normal = vectors[0];
    let u = vectors[2];
    let v = normal.cross(&u);

    let scale = params.search_radius;
    let local: Vec<(f64, f64, f64)> = members
        .map(|j| {
            let d = points[j].coords - mean;
            (d.dot(&u) / scale, d.dot(&v) / scale, d.dot(&normal))
        })
        .collect();
    let (qa, qb, _) = local[0];

    let height = fit_height(&local, &weights, params.polynomial_order, qa, qb);
    Ok(Point3::from(mean + u * (qa * scale) + v * (qb * scale) + normal * height))
}

fn basis(order: u8, a: f64, b: f64) -> Vec<f64> {
    if order >= 2 {
        vec![1.0, a, b, a * a, a * b, b * b]
    } else {
        vec![1.0, a, b]
    }
}

/// Weighted least-squares height at `(qa, qb)`, falling back to lower orders when the
/// system is under-determined.
fn fit_height(local: &[(f64, f64, f64)], weights: &[f64], order: u8, qa: f64, qb: f64) -> f64 {
    for ord in (1..=order).rev() {
        let k = if ord >= 2 { 6 } else { 3 };
        if local.len() < k + 1 {
            continue;
        }
        let mut ata = DMatrix::<f64>::zeros(k, k);
        let mut atb = DVector::<f64>::zeros(k);
        for (&(a, b, c), &w) in local.iter().zip(weights) {
            let phi = basis(ord, a, b);
            for r in 0..k {
                atb[r] += w * phi[r] * c;
                for s in 0..k {
                    ata[(r, s)] += w * phi[r] * phi[s];
                }
            }
        }
        if let Some(chol) = ata.cholesky() {
            let coef = chol.solve(&atb);
            let phi = basis(ord, qa, qb);
            return phi.iter().zip(coef.iter()).map(|(x, c)| x * c).sum();
        }
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid(n: usize, pitch: f64, mut f: impl FnMut(f64, f64) -> f64) -> Vec<Point3> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let x = i as f64 * pitch;
                let y = j as f64 * pitch;
                pts.push(Point3::new(x, y, f(x, y)));
            }
        }
        pts
    }

    #[test]
    fn planar_cloud_is_fixed_point() {
        let pts = grid(20, 0.001, |x, y| 0.3 * x - 0.2 * y + 0.01);
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let (out, diag) = mls_smooth(&cloud, &MlsParams::new(0.006, 2)).unwrap();
        assert!(diag.is_empty());
        for (a, b) in out.points().iter().zip(&pts) {
            assert!((a - b).norm() < 1e-9);
        }
        let (again, _) = mls_smooth(&out, &MlsParams::new(0.006, 2)).unwrap();
        for (a, b) in again.points().iter().zip(out.points()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn noisy_plane_rms_halved() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.0005).unwrap();
        let pts = grid(60, 0.001, |_, _| noise.sample(&mut rng));
        let rms = |p: &[Point3]| (p.iter().map(|q| q.z * q.z).sum::<f64>() / p.len() as f64).sqrt();
        let before = rms(&pts);
        let cloud = PointCloud::new(pts).unwrap();
        let (out, _) = mls_smooth(&cloud, &MlsParams::new(0.006, 2)).unwrap();
        let after = rms(out.points());
        assert!(after <= 0.5 * before, "rms {before} -> {after}");
    }

    #[test]
    fn quadratic_surface_barely_moves() {
        let pts = grid(41, 0.001, |x, _| (x - 0.02) * (x - 0.02));
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let (out, _) = mls_smooth(&cloud, &MlsParams::new(0.005, 2)).unwrap();
        let max = out
            .points()
            .iter()
            .zip(&pts)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max <= 1e-4, "max displacement {max}");
    }

    #[test]
    fn sparse_and_collinear_points_pass_through() {
        let mut pts: Vec<Point3> = (0..10).map(|i| Point3::new(i as f64 * 0.001, 0.0, 0.0)).collect();
        pts.push(Point3::new(1.0, 1.0, 1.0));
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let (out, diag) = mls_smooth(&cloud, &MlsParams::new(0.0035, 2)).unwrap();
        assert_eq!(out.points(), &pts[..]);
        assert_eq!(diag.len(), 11);
        assert!(diag.entries.iter().any(|e| e.index == 10 && e.reason == DegeneracyReason::TooFewNeighbors));
        assert!(diag.entries.iter().any(|e| e.index == 5 && e.reason == DegeneracyReason::Collinear));
    }

    #[test]
    fn rejects_bad_params() {
        let cloud = PointCloud::new(vec![Point3::origin()]).unwrap();
        assert!(mls_smooth(&cloud, &MlsParams::new(0.0, 2)).is_err());
        assert!(mls_smooth(&cloud, &MlsParams::new(1.0, 3)).is_err());
    }
}
