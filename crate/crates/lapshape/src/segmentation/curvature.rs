//! Curvature-aware seeded segmentation: k-means classes of the per-point
//! normal-variation proxy seed regions grown without crossing sharp edges,
//! then the most similar adjacent regions merge until the stop condition.

use std::collections::BTreeMap;

use crate::cloud::PointCloud;
use crate::cluster1d::kmeans_1d;
use crate::error::{Error, Result};
use crate::linalg::V3;
use crate::real::Real;

use super::Segmentation;

#[derive(Clone, Copy, Debug)]
pub enum CurvatureStop<T: Real> {
    TargetCount(usize),
    MaxEdgeValue(T),
}

/// Segment by curvature classes. `edges` are sharp points (ascending ids),
/// `kappa` the per-point normal-variation values, both computed at radius
/// `r`.
pub fn curvature_segment<T: Real>(
    cloud: &PointCloud<T>,
    _normals: &[V3<T>],
    edges: &[usize],
    kappa: &[T],
    r: T,
    k_seeds: usize,
    stop: CurvatureStop<T>,
) -> Result<Segmentation<T>> {
    let n = cloud.len();
    if kappa.len() != n {
        return Err(Error::invalid("kappa length must match the cloud"));
    }
    let mut is_edge = vec![false; n];
    for &e in edges {
        is_edge[e] = true;
    }
    if is_edge.iter().all(|&e| e) {
        return Err(Error::invalid("every point is an edge point"));
    }
    if k_seeds < 1 {
        return Err(Error::invalid("k_seeds must be at least 1"));
    }
    if let CurvatureStop::TargetCount(c) = stop {
        if c < 1 {
            return Err(Error::invalid("target segment count must be at least 1"));
        }
    }

    let classes = kmeans_1d(kappa, k_seeds, 100);
    let neighbors: Vec<Vec<usize>> = (0..n).map(|i| cloud.radius_neighbors(i, r)).collect();

    // grow same-class regions breadth-first, never crossing edge points
    let mut region: Vec<usize> = vec![usize::MAX; n];
    let mut region_count = 0usize;
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if is_edge[start] || region[start] != usize::MAX {
            continue;
        }
        let id = region_count;
        region_count += 1;
        region[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if !is_edge[q] && region[q] == usize::MAX && classes[q] == classes[p] {
                    region[q] = id;
                    queue.push_back(q);
                }
            }
        }
    }

    // agglomerative merging over the region adjacency graph
    let mut parent: Vec<usize> = (0..region_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut live = region_count;
    loop {
        if let CurvatureStop::TargetCount(c) = stop {
            if live <= c {
                break;
            }
        }
        if live <= 1 {
            break;
        }
        // region means over current merge state
        let mut sums: BTreeMap<usize, (T, usize)> = BTreeMap::new();
        for p in 0..n {
            if region[p] != usize::MAX {
                let rt = find(&mut parent, region[p]);
                let e = sums.entry(rt).or_insert((T::zero(), 0));
                e.0 += kappa[p];
                e.1 += 1;
            }
        }
        let mean =
            |e: &(T, usize)| e.0 / T::from_usize(e.1.max(1)).unwrap();

        // adjacency weights: |mean kappa difference| + mean boundary kappa
        let mut boundary: BTreeMap<(usize, usize), (T, usize)> = BTreeMap::new();
        let mut touch = |a: usize, b: usize, k: T, m: &mut BTreeMap<(usize, usize), (T, usize)>| {
            let key = (a.min(b), a.max(b));
            let e = m.entry(key).or_insert((T::zero(), 0));
            e.0 += k;
            e.1 += 1;
        };
        for p in 0..n {
            if region[p] == usize::MAX {
                // edge point adjacent to several regions joins their boundary
                let mut seen: Vec<usize> = Vec::new();
                for &q in &neighbors[p] {
                    if region[q] != usize::MAX {
                        let rt = find(&mut parent, region[q]);
                        if !seen.contains(&rt) {
                            seen.push(rt);
                        }
                    }
                }
                seen.sort_unstable();
                for i in 0..seen.len() {
                    for j in (i + 1)..seen.len() {
                        touch(seen[i], seen[j], kappa[p], &mut boundary);
                    }
                }
            } else {
                let ra = find(&mut parent, region[p]);
                for &q in &neighbors[p] {
                    if region[q] != usize::MAX {
                        let rb = find(&mut parent, region[q]);
                        if ra != rb {
                            touch(ra, rb, kappa[p], &mut boundary);
                        }
                    }
                }
            }
        }
        if boundary.is_empty() {
            break; // disconnected regions cannot merge further
        }
        let mut best: Option<((usize, usize), T)> = None;
        for (&(a, b), &(bk, bc)) in &boundary {
            let ma = mean(&sums[&a]);
            let mb = mean(&sums[&b]);
            let w = (ma - mb).abs() + bk / T::from_usize(bc.max(1)).unwrap();
            match best {
                None => best = Some(((a, b), w)),
                Some((_, bw)) if w < bw => best = Some(((a, b), w)),
                _ => {}
            }
        }
        let ((a, b), w) = best.unwrap();
        if let CurvatureStop::MaxEdgeValue(limit) = stop {
            if w > limit {
                break;
            }
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[rb.max(ra)] = rb.min(ra);
        live -= 1;
    }

    // edge points join the adjacent region with the nearest mean kappa
    let mut root_of_point: Vec<usize> = (0..n)
        .map(|p| {
            if region[p] == usize::MAX {
                usize::MAX
            } else {
                find(&mut parent, region[p])
            }
        })
        .collect();
    let mut sums: BTreeMap<usize, (T, usize)> = BTreeMap::new();
    for p in 0..n {
        if root_of_point[p] != usize::MAX {
            let e = sums.entry(root_of_point[p]).or_insert((T::zero(), 0));
            e.0 += kappa[p];
            e.1 += 1;
        }
    }
    loop {
        let mut changed = false;
        let mut stuck = false;
        for p in 0..n {
            if root_of_point[p] != usize::MAX {
                continue;
            }
            let mut best: Option<(T, usize)> = None;
            for &q in &neighbors[p] {
                if root_of_point[q] != usize::MAX {
                    let rt = root_of_point[q];
                    let (s, c) = sums[&rt];
                    let d = (kappa[p] - s / T::from_usize(c).unwrap()).abs();
                    match best {
                        None => best = Some((d, rt)),
                        Some((bd, brt)) if d < bd || (d == bd && rt < brt) => {
                            best = Some((d, rt))
                        }
                        _ => {}
                    }
                }
            }
            match best {
                Some((_, rt)) => {
                    root_of_point[p] = rt;
                    changed = true;
                }
                None => stuck = true,
            }
        }
        if !stuck {
            break;
        }
        if !changed {
            return Err(Error::invalid(
                "edge points are disconnected from every region",
            ));
        }
    }

    // densify labels by ascending root id (stable, deterministic)
    let mut roots: Vec<usize> = root_of_point.clone();
    roots.sort_unstable();
    roots.dedup();
    let labels: Vec<u32> = root_of_point
        .iter()
        .map(|rt| roots.binary_search(rt).unwrap() as u32)
        .collect();
    let mut segment_max: Vec<(usize, T)> = vec![(usize::MAX, T::neg_infinity()); roots.len()];
    for p in 0..n {
        let s = labels[p] as usize;
        if kappa[p] > segment_max[s].1 {
            segment_max[s] = (p, kappa[p]);
        }
    }
    Ok(Segmentation::new(labels, segment_max, None, None, None))
}
