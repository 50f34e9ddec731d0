//! Raw-cloud smoothing and surface-normal estimation.

mod mls;
mod normals;

use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::UnitVector3;

pub use mls::{mls_smooth, mls_smooth_with_index, MlsParams};
pub use normals::{estimate_normals, estimate_normals_with_index, NormalParams};

/// Why a point could not be processed normally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegeneracyReason {
    /// Fewer than three neighbors inside the search radius.
    TooFewNeighbors,
    /// Neighborhood is (close to) a line or a single point.
    Collinear,
}

impl fmt::Display for DegeneracyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegeneracyReason::TooFewNeighbors => "too-few-neighbors",
            DegeneracyReason::Collinear => "collinear",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnosticEntry {
    pub index: usize,
    pub reason: DegeneracyReason,
}

/// Per-point degeneracy report. Its `Display` form is one `index reason` line per entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub entries: Vec<DiagnosticEntry>,
}

impl Diagnostics {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.entries.iter().any(|e| e.index == index)
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{} {}", e.index, e.reason)?;
        }
        Ok(())
    }
}

/// Unit-normalized sum of all point normals: the dominant surface direction of the cloud.
pub fn benchmark_normal(cloud: &PointCloud) -> Result<UnitVector3> {
    let normals = cloud.require_normals()?;
    let sum = normals.iter().fold(Vector3::zeros(), |acc, n| acc + n.into_inner());
    UnitVector3::try_new(sum, 1e-12).ok_or(Error::DegenerateBenchmark)
}

/// Eigen-decomposition of a symmetric 3x3 matrix with eigenpairs sorted by ascending eigenvalue.
pub(crate) fn sorted_eigen(m: Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.map(|k| eig.eigenvalues[k]);
    let vectors = order.map(|k| eig.eigenvectors.column(k).into_owned());
    (values, vectors)
}

/// True when the two smallest eigenvalues are tied, i.e. the smallest eigenvector is not
/// well defined.
pub(crate) fn smallest_is_ambiguous(values: &[f64; 3]) -> bool {
    let trace = values.iter().sum::<f64>();
    !(trace > 0.0) || values[1] - values[0] < 1e-12 * trace
}
