//! Per-point normal estimation from tangent frames, plus the normal-variation
//! statistic used for sharp-edge detection and curvature-aware segmentation.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::frame::build_local_frame;
use crate::linalg::{dot, V3};
use crate::real::Real;

/// Unit normal per point from its local PCA frame. Signs are arbitrary; no
/// global orientation pass is performed.
pub fn estimate_normals<T: Real>(cloud: &PointCloud<T>, r: T) -> Result<Vec<V3<T>>> {
    let results: Vec<_> = (0..cloud.len())
        .into_par_iter()
        .map(|i| build_local_frame(cloud, i, r).map(|f| f.normal))
        .collect();

    let mut insufficient = Vec::new();
    let mut degenerate = Vec::new();
    let mut normals = Vec::with_capacity(cloud.len());
    for res in results {
        match res {
            Ok(n) => normals.push(n),
            Err(Error::InsufficientSampling { point_ids }) => insufficient.extend(point_ids),
            Err(Error::DegenerateNeighborhood { point_ids }) => degenerate.extend(point_ids),
            Err(e) => return Err(e),
        }
    }
    if !insufficient.is_empty() {
        return Err(Error::InsufficientSampling {
            point_ids: insufficient,
        });
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateNeighborhood {
            point_ids: degenerate,
        });
    }
    Ok(normals)
}

/// Per-point maximum unsigned angle (folded to `[0, pi/2]`) between a point's
/// normal and the normals in its `r`-neighborhood.
pub fn normal_variation<T: Real>(cloud: &PointCloud<T>, normals: &[V3<T>], r: T) -> Vec<T> {
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let mut max_angle = T::zero();
            for j in cloud.radius_neighbors(i, r) {
                let a = folded_angle(normals[i], normals[j]);
                if a > max_angle {
                    max_angle = a;
                }
            }
            max_angle
        })
        .collect()
}

/// Points whose neighborhood normal variation exceeds `angle_threshold`
/// (radians), in ascending index order.
pub fn detect_sharp_edges<T: Real>(
    cloud: &PointCloud<T>,
    normals: &[V3<T>],
    r: T,
    angle_threshold: T,
) -> Vec<usize> {
    normal_variation(cloud, normals, r)
        .iter()
        .enumerate()
        .filter_map(|(i, &a)| (a > angle_threshold).then_some(i))
        .collect()
}

/// Unsigned angle between two unit vectors, folded to `[0, pi/2]` so normal
/// sign flips do not register.
#[inline]
pub fn folded_angle<T: Real>(a: V3<T>, b: V3<T>) -> T {
    dot(a, b).abs().min(T::one()).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm, sub};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Vec<V3<f64>> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push([i as f64, j as f64, 0.0]);
            }
        }
        pts
    }

    fn rotate(p: V3<f64>, axis: V3<f64>, ang: f64) -> V3<f64> {
        // Rodrigues rotation
        let k = crate::linalg::normalize(axis);
        let (s, c) = ang.sin_cos();
        let kxp = crate::linalg::cross(k, p);
        let kdp = dot(k, p);
        [
            p[0] * c + kxp[0] * s + k[0] * kdp * (1.0 - c),
            p[1] * c + kxp[1] * s + k[1] * kdp * (1.0 - c),
            p[2] * c + kxp[2] * s + k[2] * kdp * (1.0 - c),
        ]
    }

    #[test]
    fn planar_grid_normals_parallel() {
        let cloud = PointCloud::from_points(grid(10)).unwrap();
        let normals = estimate_normals(&cloud, 3.0).unwrap();
        for n in &normals {
            assert!((n[2].abs() - 1.0).abs() < 1e-8);
            assert!(n[0].abs() < 1e-8 && n[1].abs() < 1e-8);
        }
    }

    #[test]
    fn sphere_normals_match_radial_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = rand_distr::Normal::new(0.0f64, 1.0).unwrap();
        let pts: Vec<V3<f64>> = (0..1500)
            .map(|_| {
                use rand_distr::Distribution;
                let v: V3<f64> = [
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                ];
                crate::linalg::normalize(v)
            })
            .collect();
        let cloud = PointCloud::from_points(pts).unwrap();
        // 5h: wide enough that Poisson sampling gaps cannot starve any frame
        let r = cloud.spacing() * 5.0;
        let normals = estimate_normals(&cloud, r).unwrap();
        let mut errs: Vec<f64> = (0..cloud.len())
            .map(|i| folded_angle(normals[i], crate::linalg::normalize(cloud.point(i))))
            .collect();
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = errs[errs.len() / 2].to_degrees();
        assert!(median < 3.0, "median angular error {median} deg");
    }

    #[test]
    fn normals_are_rotation_equivariant_up_to_sign() {
        let pts: Vec<V3<f64>> = grid(8)
            .into_iter()
            .map(|p| [p[0], p[1], 0.2 * (p[0] * 0.9).sin() + 0.1 * (p[1] * 1.3).cos()])
            .collect();
        let axis = [0.3, 1.0, 0.2];
        let ang = 1.1;
        let rotated: Vec<V3<f64>> = pts.iter().map(|&p| rotate(p, axis, ang)).collect();
        let c0 = PointCloud::from_points(pts).unwrap();
        let c1 = PointCloud::from_points(rotated).unwrap();
        let r = c0.spacing() * 3.0;
        let n0 = estimate_normals(&c0, r).unwrap();
        let n1 = estimate_normals(&c1, r).unwrap();
        for i in 0..c0.len() {
            let rn = rotate(n0[i], axis, ang);
            let diff = norm(sub(rn, n1[i])).min(norm(crate::linalg::add(rn, n1[i])));
            assert!(diff < 1e-8, "point {i}: {diff}");
        }
    }

    #[test]
    fn crease_points_flagged_near_dihedral() {
        // two half-planes meeting at a 90-degree dihedral along the y axis
        let mut pts = Vec::new();
        let n = 20;
        for i in 0..n {
            for j in 0..n {
                let (u, v) = (i as f64 * 0.1, j as f64 * 0.1);
                pts.push([u, v, 0.0]); // z = 0 half-plane, x >= 0
                if i > 0 {
                    pts.push([0.0, v, u]); // x = 0 half-plane, z > 0
                }
            }
        }
        let cloud = PointCloud::from_points(pts).unwrap();
        let r = cloud.spacing() * 3.0;
        let normals = estimate_normals(&cloud, r).unwrap();
        let edges = detect_sharp_edges(&cloud, &normals, r, 45f64.to_radians());
        assert!(!edges.is_empty());
        for &e in &edges {
            let p = cloud.point(e);
            // crease line is x = z = 0
            let d = (p[0] * p[0] + p[2] * p[2]).sqrt();
            assert!(d <= r, "flagged point {e} at distance {d} from crease");
        }
    }

    #[test]
    fn flat_grid_has_no_edges() {
        let cloud = PointCloud::from_points(grid(10)).unwrap();
        let normals = estimate_normals(&cloud, 3.0).unwrap();
        let edges = detect_sharp_edges(&cloud, &normals, 3.0, 1e-6);
        assert!(edges.is_empty());
    }

    #[test]
    fn zero_threshold_flags_noisy_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pts: Vec<V3<f64>> = grid(10)
            .into_iter()
            .map(|p| [p[0], p[1], rng.random_range(-0.05..0.05)])
            .collect();
        let cloud = PointCloud::from_points(pts).unwrap();
        let normals = estimate_normals(&cloud, 3.0).unwrap();
        let edges = detect_sharp_edges(&cloud, &normals, 3.0, 0.0);
        assert_eq!(edges.len(), cloud.len());
    }

    #[test]
    fn insufficient_sampling_collects_all_failing_ids() {
        let mut pts = grid(6);
        pts.push([100.0, 100.0, 0.0]);
        pts.push([-100.0, -100.0, 0.0]);
        let cloud = PointCloud::from_points(pts).unwrap();
        match estimate_normals(&cloud, 2.0) {
            Err(Error::InsufficientSampling { point_ids }) => {
                assert_eq!(point_ids, vec![36, 37]);
            }
            other => panic!("expected insufficient sampling, got {other:?}"),
        }
    }
}
