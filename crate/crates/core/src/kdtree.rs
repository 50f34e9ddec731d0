//! Static kd-tree over the points of a cloud, answering exact radius queries.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Point3;

const LEAF_SIZE: usize = 12;

/// Indices of the points within `radius` of a center point.
///
/// The center itself is never a member, and `neighbor_indices` is sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub center_index: usize,
    pub neighbor_indices: Vec<usize>,
    pub radius: f64,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.neighbor_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbor_indices.is_empty()
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Immutable spatial index. Safe to query from many threads at once.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    // Coordinates stored in tree order, next to the original index.
    coords: Vec<[f64; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    source: Vec<[f64; 3]>,
}

impl SpatialIndex {
    /// Builds the index over every point of `cloud`.
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        Self::from_points(cloud.points())
    }

    pub fn from_points(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let source: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        build_node(&source, &mut order, 0, points.len(), &mut nodes);
        let coords = order.iter().map(|&i| source[i]).collect();
        Ok(Self {
            coords,
            order,
            nodes,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// All points with distance `<= r` from point `center_index`, self excluded.
    pub fn radius_neighbors(&self, center_index: usize, r: f64) -> Result<NeighborSet> {
        if center_index >= self.len() {
            return Err(Error::InvalidIndex {
                index: center_index,
                len: self.len(),
            });
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        let mut out = Vec::new();
        self.collect_within(&self.source[center_index], r, &mut out);
        out.retain(|&i| i != center_index);
        out.sort_unstable();
        Ok(NeighborSet {
            center_index,
            neighbor_indices: out,
            radius: r,
        })
    }

    /// Indices (unsorted) of all points with distance `<= r` from an arbitrary query point.
    pub fn within(&self, query: &Point3, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_within(&[query.x, query.y, query.z], r, &mut out);
        out
    }

    fn collect_within(&self, q: &[f64; 3], r: f64, out: &mut Vec<usize>) {
        let r2 = r * r;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { start, end } => {
                    for k in start..end {
                        if dist2(&self.coords[k], q) <= r2 {
                            out.push(self.order[k]);
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let d = q[axis] - value;
                    if d <= r {
                        stack.push(left);
                    }
                    if d >= -r {
                        stack.push(right);
                    }
                }
            }
        }
    }

    /// Nearest other point to point `i` and its distance, or `None` for a one-point cloud.
    pub fn nearest_other(&self, i: usize) -> Option<(usize, f64)> {
        let q = self.source[i];
        self.nearest_matching(&q, |j| j != i)
    }

    /// Nearest point to `q` satisfying `accept`.
    pub fn nearest_matching(&self, q: &[f64; 3], accept: impl Fn(usize) -> bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_d2 = f64::INFINITY;
        let mut stack = vec![(0usize, 0.0f64)];
        while let Some((id, bound)) = stack.pop() {
            if bound > best_d2 {
                continue;
            }
            match self.nodes[id] {
                Node::Leaf { start, end } => {
                    for k in start..end {
                        let j = self.order[k];
                        let d2 = dist2(&self.coords[k], q);
                        let better = d2 < best_d2 || (d2 == best_d2 && best.is_some_and(|(b, _)| j < b));
                        if better && accept(j) {
                            best_d2 = d2;
                            best = Some((j, d2));
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let d = q[axis] - value;
                    let (near, far) = if d <= 0.0 { (left, right) } else { (right, left) };
                    stack.push((far, d * d));
                    stack.push((near, bound));
                }
            }
        }
        best.map(|(j, d2)| (j, d2.sqrt()))
    }
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

fn build_node(src: &[[f64; 3]], order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    let slice = &mut order[start..end];
    if slice.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    // Split along the axis of largest extent.
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in slice.iter() {
        for a in 0..3 {
            lo[a] = lo[a].min(src[i][a]);
            hi[a] = hi[a].max(src[i][a]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    if hi[axis] - lo[axis] == 0.0 {
        // All points coincide.
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| src[a][axis].total_cmp(&src[b][axis]).then(a.cmp(&b)));
    let value = src[slice[mid]][axis];
    // Left holds coordinates <= value, right >= value.
    nodes.push(Node::Leaf { start, end });
    let left = build_node(src, order, start, start + mid, nodes);
    let right = build_node(src, order, start + mid, end, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}

/// Median distance from each point to its nearest other point.
///
/// Used to derive spacing-relative default radii.
pub fn median_spacing(index: &SpatialIndex) -> Option<f64> {
    use rayon::prelude::*;
    let mut d: Vec<f64> = (0..index.len())
        .into_par_iter()
        .filter_map(|i| index.nearest_other(i).map(|(_, d)| d))
        .collect();
    if d.is_empty() {
        return None;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    Some(*m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(points: &[Point3], c: usize, r: f64) -> Vec<usize> {
        let q = points[c];
        (0..points.len())
            .filter(|&j| j != c && (points[j] - q).norm_squared() <= r * r)
            .collect()
    }

    fn random_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point3::new(rng.random::<f64>() * 0.1, rng.random::<f64>() * 0.1, rng.random::<f64>() * 0.1))
            .collect()
    }

    #[test]
    fn single_point_has_no_neighbors() {
        let idx = SpatialIndex::from_points(&[Point3::new(1.0, 2.0, 3.0)]).unwrap();
        assert!(idx.radius_neighbors(0, 10.0).unwrap().is_empty());
        assert!(idx.nearest_other(0).is_none());
    }

    #[test]
    fn unit_grid_axis_neighbors() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    pts.push(Point3::new(i as f64, j as f64, k as f64));
                }
            }
        }
        let idx = SpatialIndex::from_points(&pts).unwrap();
        let center = 2 * 25 + 2 * 5 + 2;
        let n = idx.radius_neighbors(center, 1.05).unwrap();
        let mut expected = vec![center - 25, center + 25, center - 5, center + 5, center - 1, center + 1];
        expected.sort_unstable();
        assert_eq!(n.neighbor_indices, expected);
    }

    #[test]
    fn small_and_large_radii() {
        let pts = random_points(200, 3);
        let idx = SpatialIndex::from_points(&pts).unwrap();
        assert!(idx.radius_neighbors(0, 1e-9).unwrap().is_empty());
        assert_eq!(idx.radius_neighbors(5, 10.0).unwrap().len(), 199);
    }

    #[test]
    fn matches_brute_force() {
        let pts = random_points(1000, 11);
        let idx = SpatialIndex::from_points(&pts).unwrap();
        for &r in &[0.005, 0.02, 0.05] {
            for c in (0..1000).step_by(7) {
                assert_eq!(idx.radius_neighbors(c, r).unwrap().neighbor_indices, brute_force(&pts, c, r));
            }
        }
    }

    #[test]
    fn nearest_matches_brute_force() {
        let pts = random_points(500, 5);
        let idx = SpatialIndex::from_points(&pts).unwrap();
        for i in 0..500 {
            let (j, d) = idx.nearest_other(i).unwrap();
            let best = (0..500)
                .filter(|&k| k != i)
                .map(|k| (pts[k] - pts[i]).norm())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d, best);
            assert_ne!(i, j);
        }
    }

    #[test]
    fn invalid_queries() {
        let idx = SpatialIndex::from_points(&random_points(10, 1)).unwrap();
        assert!(idx.radius_neighbors(10, 0.1).is_err());
        assert!(idx.radius_neighbors(0, 0.0).is_err());
    }

    #[test]
    fn duplicate_points() {
        let pts = vec![Point3::new(1.0, 1.0, 1.0); 40];
        let idx = SpatialIndex::from_points(&pts).unwrap();
        assert_eq!(idx.radius_neighbors(3, 0.5).unwrap().len(), 39);
    }
}
