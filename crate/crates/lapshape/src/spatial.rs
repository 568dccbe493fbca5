//! Axis-aligned kd-tree for radius and nearest-neighbor queries.
//!
//! Built once per cloud and read-only afterwards, so it is safe to share
//! across threads.

use crate::linalg::{dist, V3};
use crate::real::Real;

const LEAF_SIZE: usize = 12;

#[derive(Clone, Debug)]
struct Node {
    // leaf: indices[start..end]; internal: split plane and children
    start: u32,
    end: u32,
    axis: u8,
    split: f64,
    left: u32,
    right: u32,
}

const NO_CHILD: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct KdTree<T: Real> {
    points: Vec<V3<T>>,
    indices: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

impl<T: Real> KdTree<T> {
    pub fn build(points: &[V3<T>]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            indices: (0..points.len() as u32).collect(),
            nodes: Vec::new(),
            root: NO_CHILD,
        };
        if !points.is_empty() {
            tree.root = tree.build_range(0, points.len());
        }
        tree
    }

    fn build_range(&mut self, start: usize, end: usize) -> u32 {
        let count = end - start;
        if count <= LEAF_SIZE {
            self.nodes.push(Node {
                start: start as u32,
                end: end as u32,
                axis: 0,
                split: 0.0,
                left: NO_CHILD,
                right: NO_CHILD,
            });
            return (self.nodes.len() - 1) as u32;
        }

        // split along the axis of largest extent
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for &idx in &self.indices[start..end] {
            let p = self.points[idx as usize];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let mut axis = 0usize;
        for a in 1..3 {
            if hi[a] - lo[a] > hi[axis] - lo[axis] {
                axis = a;
            }
        }

        let mid = start + count / 2;
        let points = &self.points;
        self.indices[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            points[i as usize][axis]
                .partial_cmp(&points[j as usize][axis])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        let split = crate::real::to_f64(self.points[self.indices[mid] as usize][axis]);

        let node_idx = self.nodes.len();
        self.nodes.push(Node {
            start: 0,
            end: 0,
            axis: axis as u8,
            split,
            left: NO_CHILD,
            right: NO_CHILD,
        });
        let left = self.build_range(start, mid);
        let right = self.build_range(mid, end);
        self.nodes[node_idx].left = left;
        self.nodes[node_idx].right = right;
        node_idx as u32
    }

    /// Indices of all points with `0 < distance(center, p) <= r`, sorted by
    /// ascending distance, ties broken by ascending index. The center point
    /// itself is excluded by identity, not by distance.
    pub fn radius_neighbors(&self, center: usize, r: T) -> Vec<usize> {
        let mut found: Vec<(T, usize)> = Vec::new();
        let q = self.points[center];
        self.radius_rec(self.root, q, r, &mut found);
        found.retain(|&(_, i)| i != center);
        found.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        found.into_iter().map(|(_, i)| i).collect()
    }

    fn radius_rec(&self, node: u32, q: V3<T>, r: T, out: &mut Vec<(T, usize)>) {
        if node == NO_CHILD {
            return;
        }
        let n = &self.nodes[node as usize];
        if n.left == NO_CHILD {
            for &idx in &self.indices[n.start as usize..n.end as usize] {
                let d = dist(q, self.points[idx as usize]);
                if d <= r {
                    out.push((d, idx as usize));
                }
            }
            return;
        }
        let axis = n.axis as usize;
        let delta = crate::real::to_f64(q[axis]) - n.split;
        let (near, far) = if delta < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.radius_rec(near, q, r, out);
        if delta.abs() <= crate::real::to_f64(r) {
            self.radius_rec(far, q, r, out);
        }
    }

    /// Distance from point `center` to its nearest other point.
    pub fn nearest_other_distance(&self, center: usize) -> T {
        let q = self.points[center];
        let mut best = T::infinity();
        self.nearest_rec(self.root, q, center, &mut best);
        best
    }

    fn nearest_rec(&self, node: u32, q: V3<T>, skip: usize, best: &mut T) {
        if node == NO_CHILD {
            return;
        }
        let n = &self.nodes[node as usize];
        if n.left == NO_CHILD {
            for &idx in &self.indices[n.start as usize..n.end as usize] {
                if idx as usize == skip {
                    continue;
                }
                let d = dist(q, self.points[idx as usize]);
                if d < *best {
                    *best = d;
                }
            }
            return;
        }
        let axis = n.axis as usize;
        let delta = crate::real::to_f64(q[axis]) - n.split;
        let (near, far) = if delta < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.nearest_rec(near, q, skip, best);
        if delta.abs() <= crate::real::to_f64(*best) {
            self.nearest_rec(far, q, skip, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, seed: u64) -> Vec<V3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect()
    }

    fn brute_radius(points: &[V3<f64>], center: usize, r: f64) -> Vec<usize> {
        let mut v: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != center)
            .map(|(i, &p)| (dist(points[center], p), i))
            .filter(|&(d, _)| d <= r)
            .collect();
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        v.into_iter().map(|(_, i)| i).collect()
    }

    #[test]
    fn radius_query_matches_linear_scan() {
        let points = random_cloud(1000, 3);
        let tree = KdTree::build(&points);
        for center in (0..1000).step_by(37) {
            for r in [0.05, 0.2, 0.7, 3.0] {
                assert_eq!(
                    tree.radius_neighbors(center, r),
                    brute_radius(&points, center, r),
                    "center {center} r {r}"
                );
            }
        }
    }

    #[test]
    fn nearest_other_matches_linear_scan() {
        let points = random_cloud(500, 11);
        let tree = KdTree::build(&points);
        for center in 0..points.len() {
            let brute = points
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != center)
                .map(|(_, &p)| dist(points[center], p))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest_other_distance(center), brute);
        }
    }
}
