//! Local tangent frames and their 2D Delaunay triangulations.
//!
//! Each point's neighborhood is projected onto a PCA tangent plane and
//! triangulated there; triangle areas around each vertex provide the
//! per-point representative areas the Laplacian assembly needs.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::{dot, scale, sub, sym_eigen_3x3, V3};
use crate::real::{cast, to_f64, Real};

/// PCA tangent frame of one point's `r`-neighborhood.
///
/// `neighbor_indices[0]` is always the center point itself; the rest follow in
/// ascending-distance order. `projected[k]` holds the in-plane coordinates of
/// `neighbor_indices[k]`.
#[derive(Clone, Debug)]
pub struct LocalFrame<T: Real> {
    pub center_index: usize,
    pub neighbor_indices: Vec<usize>,
    /// Neighborhood centroid.
    pub origin: V3<T>,
    /// Two orthonormal in-plane directions.
    pub basis: [V3<T>; 2],
    /// Least-variance PCA direction; unit length, arbitrary sign.
    pub normal: V3<T>,
    pub projected: Vec<[T; 2]>,
    /// Cloud spacing at build time; scales the triangle degeneracy threshold.
    pub spacing_h: T,
}

/// 2D Delaunay triangulation of a frame's projected neighborhood.
///
/// `triangles` index into the frame's neighbor list; `vertex_area[k]` is the
/// summed area of triangles incident to `neighbor_indices[k]`.
#[derive(Clone, Debug)]
pub struct LocalTriangulation<T: Real> {
    pub triangles: Vec<[usize; 3]>,
    pub vertex_area: Vec<T>,
}

impl<T: Real> LocalTriangulation<T> {
    pub fn total_triangle_area(&self) -> T {
        self.vertex_area.iter().fold(T::zero(), |acc, &a| acc + a) / cast::<T>(3.0)
    }
}

pub fn build_local_frame<T: Real>(
    cloud: &PointCloud<T>,
    center: usize,
    r: T,
) -> Result<LocalFrame<T>> {
    let neighbors = cloud.radius_neighbors(center, r);
    // neighborhood includes the center itself
    if neighbors.len() + 1 < 3 {
        return Err(Error::InsufficientSampling {
            point_ids: vec![center],
        });
    }
    let mut indices = Vec::with_capacity(neighbors.len() + 1);
    indices.push(center);
    indices.extend_from_slice(&neighbors);

    let inv_n = T::one() / T::from_usize(indices.len()).unwrap();
    let mut origin = [T::zero(); 3];
    for &i in &indices {
        origin = crate::linalg::add(origin, cloud.point(i));
    }
    origin = scale(origin, inv_n);

    let mut cov = [[T::zero(); 3]; 3];
    for &i in &indices {
        let d = sub(cloud.point(i), origin);
        for a in 0..3 {
            for b in a..3 {
                cov[a][b] += d[a] * d[b];
            }
        }
    }
    for a in 0..3 {
        for b in a..3 {
            cov[a][b] *= inv_n;
            cov[b][a] = cov[a][b];
        }
    }

    let (evals, evecs) = sym_eigen_3x3(cov);
    if !(evals[1] > evals[0] * cast::<T>(1e-12)) {
        return Err(Error::DegenerateNeighborhood {
            point_ids: vec![center],
        });
    }

    let projected = indices
        .iter()
        .map(|&i| {
            let d = sub(cloud.point(i), origin);
            [dot(d, evecs[0]), dot(d, evecs[1])]
        })
        .collect();

    Ok(LocalFrame {
        center_index: center,
        neighbor_indices: indices,
        origin,
        basis: [evecs[0], evecs[1]],
        normal: evecs[2],
        projected,
        spacing_h: cloud.spacing(),
    })
}

/// Delaunay-triangulate a frame's projected points and accumulate per-vertex
/// areas. Triangles with area at or below `1e-14 * spacing^2` are discarded.
pub fn triangulate_frame<T: Real>(frame: &LocalFrame<T>) -> Result<LocalTriangulation<T>> {
    let pts: Vec<delaunator::Point> = frame
        .projected
        .iter()
        .map(|p| delaunator::Point {
            x: to_f64(p[0]),
            y: to_f64(p[1]),
        })
        .collect();
    let tri = delaunator::triangulate(&pts);
    if tri.triangles.is_empty() {
        return Err(Error::DegenerateNeighborhood {
            point_ids: vec![frame.center_index],
        });
    }

    let floor = cast::<T>(1e-14) * frame.spacing_h * frame.spacing_h;
    let mut triangles = Vec::with_capacity(tri.triangles.len() / 3);
    let mut vertex_area = vec![T::zero(); frame.projected.len()];
    for t in tri.triangles.chunks_exact(3) {
        let (ia, ib, ic) = (t[0], t[1], t[2]);
        let a = frame.projected[ia];
        let b = frame.projected[ib];
        let c = frame.projected[ic];
        let area = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
            / cast::<T>(2.0);
        if area <= floor {
            continue;
        }
        triangles.push([ia, ib, ic]);
        vertex_area[ia] += area;
        vertex_area[ib] += area;
        vertex_area[ic] += area;
    }
    if triangles.is_empty() {
        return Err(Error::DegenerateNeighborhood {
            point_ids: vec![frame.center_index],
        });
    }
    Ok(LocalTriangulation {
        triangles,
        vertex_area,
    })
}
