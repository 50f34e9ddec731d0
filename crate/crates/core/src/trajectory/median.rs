//! Geometric median of a point set by gradient descent with Armijo backtracking.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::Point3;

/// Gradient-descent settings for the waypoint objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdParams {
    /// Iteration stops once an accepted step moves the iterate by less than
    /// `tolerance × extent`, where `extent` is the segment's bounding-box diagonal.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GdParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_iterations: 1000,
        }
    }
}

impl GdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "gradient descent needs a positive tolerance and at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianResult {
    pub position: Point3,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C: f64 = 1e-4;
const SKIP_DISTANCE: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;

/// Sum of Euclidean distances from `p` to every point.
pub fn sum_of_distances(points: &[Point3], p: &Point3) -> f64 {
    points.iter().map(|q| (p - q).norm()).sum()
}

fn gradient(points: &[Point3], p: &Point3) -> (Vector3<f64>, f64) {
    let mut g = Vector3::zeros();
    let mut inv_sum = 0.0;
    for q in points {
        let d = p - q;
        let n = d.norm();
        if n < SKIP_DISTANCE {
            continue;
        }
        g += d / n;
        inv_sum += 1.0 / n;
    }
    (g, inv_sum)
}

/// Minimizes `Σ ‖P − Pᵢ‖` starting from the centroid.
///
/// Each iteration steps against the gradient; the trial step starts at twice the last accepted
/// step (or `1 / Σ 1/‖P − Pᵢ‖` on the first iteration) and is halved until the Armijo condition
/// holds. The best iterate is compared against the nearest data point, since the minimum may
/// sit exactly on a sample where the objective is not differentiable.
pub fn geometric_median(points: &[Point3], params: &GdParams) -> Result<MedianResult> {
    params.validate()?;
    if points.is_empty() {
        return Err(Error::EmptyGroove);
    }
    let mut lo = points[0].coords;
    let mut hi = points[0].coords;
    let mut sum = Vector3::zeros();
    for p in points {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
        sum += p.coords;
    }
    let extent = (hi - lo).norm();
    let mut x = Point3::from(sum / points.len() as f64);
    let mut fx = sum_of_distances(points, &x);
    if extent == 0.0 {
        return Ok(MedianResult {
            position: points[0],
            objective: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let stop = params.tolerance * extent;

    let mut step: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iterations {
        iterations += 1;
        let (g, inv_sum) = gradient(points, &x);
        let g2 = g.norm_squared();
        if g2 == 0.0 || inv_sum == 0.0 {
            converged = true;
            break;
        }
        let mut t = step.map_or(1.0 / inv_sum, |s| 2.0 * s);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = x - g * t;
            let ft = sum_of_distances(points, &trial);
            if ft <= fx - ARMIJO_C * t * g2 {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((next, fnext)) = accepted else {
            // No decrease possible along the gradient: stationary up to rounding.
            converged = true;
            break;
        };
        let moved = (next - x).norm();
        x = next;
        fx = fnext;
        step = Some(t);
        if moved < stop {
            converged = true;
            break;
        }
    }

    // Nonsmooth minimum on a data point.
    if let Some(q) = points
        .iter()
        .min_by(|a, b| (*a - x).norm_squared().total_cmp(&(*b - x).norm_squared()))
    {
        let fq = sum_of_distances(points, q);
        if fq < fx {
            x = *q;
            fx = fq;
        }
    }
    Ok(MedianResult {
        position: x,
        objective: fx,
        iterations,
        converged,
    })
}
