//! The point cloud container.

use crate::error::{Error, Result};
use crate::geometry::{is_finite, Point3, RigidTransform, UnitVector3, UNIT_TOLERANCE};

/// An unorganized point cloud with optional per-point normals.
///
/// Point indices are stable: every stage of the pipeline produces a new cloud
/// whose index `i` refers to the same physical sample as the input's index `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<UnitVector3>>,
    viewpoint: Point3,
}

impl PointCloud {
    /// Builds a cloud without normals. Fails on empty input or non-finite coordinates.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        Self::with_viewpoint(points, Point3::origin())
    }

    pub fn with_viewpoint(points: Vec<Point3>, viewpoint: Point3) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(i) = points.iter().position(|p| !is_finite(p)) {
            return Err(Error::InvalidParameter(format!("point {i} has a non-finite coordinate")));
        }
        if !is_finite(&viewpoint) {
            return Err(Error::InvalidParameter("viewpoint is not finite".into()));
        }
        Ok(Self {
            points,
            normals: None,
            viewpoint,
        })
    }

    /// Attaches normals, one per point.
    pub fn set_normals(mut self, normals: Vec<UnitVector3>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::InvalidParameter(format!(
                "{} normals for {} points",
                normals.len(),
                self.points.len()
            )));
        }
        if let Some(i) = normals
            .iter()
            .position(|n| (n.norm() - 1.0).abs() > UNIT_TOLERANCE || !n.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidParameter(format!("normal {i} is not unit length")));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point3 {
        &self.points[i]
    }

    pub fn normals(&self) -> Option<&[UnitVector3]> {
        self.normals.as_deref()
    }

    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    /// Normals, or [`Error::MissingNormals`].
    pub fn require_normals(&self) -> Result<&[UnitVector3]> {
        self.normals().ok_or(Error::MissingNormals)
    }

    pub fn viewpoint(&self) -> &Point3 {
        &self.viewpoint
    }

    pub fn set_viewpoint(&mut self, viewpoint: Point3) {
        self.viewpoint = viewpoint;
    }

    /// Returns a copy with points replaced, keeping normals and viewpoint.
    pub(crate) fn with_points(&self, points: Vec<Point3>) -> Self {
        debug_assert_eq!(points.len(), self.points.len());
        Self {
            points,
            normals: self.normals.clone(),
            viewpoint: self.viewpoint,
        }
    }

    /// Applies a rigid transform to points, normals and viewpoint.
    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            points: self.points.iter().map(|p| t.apply_point(p)).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| t.apply_vector(n)).collect()),
            viewpoint: t.apply_point(&self.viewpoint),
        }
    }

    /// Reorders the cloud so that new index `k` holds old index `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.len());
        Self {
            points: order.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| order.iter().map(|&i| ns[i]).collect()),
            viewpoint: self.viewpoint,
        }
    }

    /// Checks that `index` refers to a point of this cloud.
    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidIndex {
                index,
                len: self.len(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Unit, Vector3};

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(PointCloud::new(vec![]), Err(Error::EmptyCloud)));
        assert!(PointCloud::new(vec![Point3::new(0.0, f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn normals_must_match_point_count() {
        let cloud = PointCloud::new(vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)]).unwrap();
        let err = cloud.set_normals(vec![Unit::new_normalize(Vector3::z())]);
        assert!(err.is_err());
    }
}
