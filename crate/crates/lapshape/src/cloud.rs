//! Point cloud container: deduplication on load, cached mean nearest-neighbor
//! spacing, bounding box, and the unit-box normalization used before
//! retrieval.

use crate::error::{Error, Result};
use crate::linalg::{dist, sub, V3};
use crate::real::{cast, Real};
use crate::spatial::KdTree;

/// An ordered set of 3D points with a spatial index and cached spacing.
///
/// Construction drops duplicate points (within `1e-12 *` bbox diagonal,
/// keeping the lowest index) and requires at least 4 surviving points.
#[derive(Clone, Debug)]
pub struct PointCloud<T: Real> {
    points: Vec<V3<T>>,
    spacing_h: T,
    dropped_duplicates: usize,
    tree: KdTree<T>,
}

/// Translation-then-scale applied by [`PointCloud::normalize_to_unit_box`]:
/// `p_out = (p_in - offset) * scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitBoxTransform<T: Real> {
    pub scale: T,
    pub offset: V3<T>,
}

impl<T: Real> UnitBoxTransform<T> {
    pub fn is_identity(&self) -> bool {
        self.scale == T::one() && self.offset == [T::zero(); 3]
    }
}

/// Mean over all points of the distance to each point's single nearest
/// neighbor. Needs at least 2 points.
pub fn estimate_spacing<T: Real>(points: &[V3<T>]) -> Result<T> {
    if points.len() < 2 {
        return Err(Error::invalid(format!(
            "spacing needs at least 2 points, got {}",
            points.len()
        )));
    }
    let tree = KdTree::build(points);
    let mut sum = T::zero();
    for i in 0..points.len() {
        sum += tree.nearest_other_distance(i);
    }
    Ok(sum / T::from_usize(points.len()).unwrap())
}

impl<T: Real> PointCloud<T> {
    pub fn from_points(points: Vec<V3<T>>) -> Result<Self> {
        let (points, dropped) = drop_duplicates(points);
        if points.len() < 4 {
            return Err(Error::invalid(format!(
                "point cloud needs at least 4 distinct points, got {}",
                points.len()
            )));
        }
        let tree = KdTree::build(&points);
        let mut sum = T::zero();
        for i in 0..points.len() {
            sum += tree.nearest_other_distance(i);
        }
        let spacing_h = sum / T::from_usize(points.len()).unwrap();
        Ok(PointCloud {
            points,
            spacing_h,
            dropped_duplicates: dropped,
            tree,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[V3<T>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> V3<T> {
        self.points[i]
    }

    /// Cached mean nearest-neighbor distance.
    pub fn spacing(&self) -> T {
        self.spacing_h
    }

    /// How many duplicate points were dropped on load.
    pub fn dropped_duplicates(&self) -> usize {
        self.dropped_duplicates
    }

    /// All points within distance `r` of point `center` (excluding the center
    /// itself), sorted by ascending distance, ties by ascending index.
    pub fn radius_neighbors(&self, center: usize, r: T) -> Vec<usize> {
        self.tree.radius_neighbors(center, r)
    }

    pub fn bbox(&self) -> (V3<T>, V3<T>) {
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for p in &self.points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> T {
        let (lo, hi) = self.bbox();
        dist(lo, hi)
    }

    /// Translate the bbox minimum to the origin and scale uniformly so the
    /// largest bbox extent is exactly 1. Returns the normalized cloud and the
    /// applied transform for provenance.
    pub fn normalize_to_unit_box(&self) -> Result<(PointCloud<T>, UnitBoxTransform<T>)> {
        let (lo, hi) = self.bbox();
        let ext = sub(hi, lo);
        let max_ext = ext[0].max(ext[1]).max(ext[2]);
        if !(max_ext > T::zero()) {
            return Err(Error::invalid("all points coincident; nothing to normalize"));
        }
        let scale = T::one() / max_ext;
        let transform = UnitBoxTransform { scale, offset: lo };
        let points: Vec<V3<T>> = self
            .points
            .iter()
            .map(|&p| {
                [
                    (p[0] - lo[0]) * scale,
                    (p[1] - lo[1]) * scale,
                    (p[2] - lo[2]) * scale,
                ]
            })
            .collect();
        Ok((PointCloud::from_points(points)?, transform))
    }
}

/// Drop points lying within `1e-12 * bbox_diagonal` of a surviving
/// lower-index point. Returns survivors in original order plus the drop count.
fn drop_duplicates<T: Real>(points: Vec<V3<T>>) -> (Vec<V3<T>>, usize) {
    if points.len() < 2 {
        return (points, 0);
    }
    let mut lo = [T::infinity(); 3];
    let mut hi = [T::neg_infinity(); 3];
    for p in &points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let tol = cast::<T>(1e-12) * dist(lo, hi);

    // sweep over x to collect candidate pairs, then greedily keep lowest index
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i], points[j]);
        a[0].partial_cmp(&b[0])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        for &j in order[k + 1..].iter() {
            if points[j][0] - points[i][0] > tol {
                break;
            }
            if dist(points[i], points[j]) <= tol {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    if pairs.is_empty() {
        return (points, 0);
    }
    let mut dropped = vec![false; points.len()];
    pairs.sort();
    for &(keep, drop) in &pairs {
        if !dropped[keep] {
            dropped[drop] = true;
        }
    }
    let count = dropped.iter().filter(|&&d| d).count();
    if count > 0 {
        log::warn!("dropped {count} duplicate point(s) on load");
    }
    let kept = points
        .into_iter()
        .zip(dropped)
        .filter_map(|(p, d)| (!d).then_some(p))
        .collect();
    (kept, count)
}
