//! Basic geometric types shared across the crate.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

pub type Point3 = nalgebra::Point3<f64>;
pub type UnitVector3 = Unit<Vector3<f64>>;

/// Tolerance used when checking that a vector is unit length.
pub const UNIT_TOLERANCE: f64 = 1e-9;

pub fn is_finite(p: &Point3) -> bool {
    p.coords.iter().all(|c| c.is_finite())
}

/// Normalizes `v`, or returns `None` when its norm is below `min_norm`.
pub fn try_unit(v: Vector3<f64>, min_norm: f64) -> Option<UnitVector3> {
    Unit::try_new(v, min_norm)
}

/// Rigid transform (rotation followed by translation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vector3::zeros())
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &UnitVector3) -> UnitVector3 {
        Unit::new_unchecked(self.rotation * v.into_inner())
    }
}

/// Accumulates the 3x3 covariance of `points` about their centroid.
///
/// Points are visited in iteration order so the sums are reproducible.
pub fn covariance<'a>(points: impl Iterator<Item = &'a Point3> + Clone) -> (Point3, Matrix3<f64>, usize) {
    let mut sum = Vector3::zeros();
    let mut n = 0usize;
    for p in points.clone() {
        sum += p.coords;
        n += 1;
    }
    if n == 0 {
        return (Point3::origin(), Matrix3::zeros(), 0);
    }
    let mean = sum / n as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - mean;
        cov += d * d.transpose();
    }
    (Point3::from(mean), cov / n as f64, n)
}
