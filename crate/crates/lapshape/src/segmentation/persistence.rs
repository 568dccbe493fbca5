//! Persistence clustering of a signature field over the operator's
//! neighborhood graph.
//!
//! Points are swept in descending field order: local maxima seed clusters,
//! other points attach to their highest-valued processed neighbor, and
//! wherever distinct clusters meet, the lower-maximum cluster merges into the
//! higher one. The full sweep yields a merge forest whose pair list is
//! independent of the threshold `tau`; the labeling for a given `tau` is the
//! cut of that forest keeping clusters whose merge gap exceeds `tau`. This
//! makes the pair list reusable across thresholds and the
//! threshold-for-segment-count inverse exact.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::real::{to_f64, Real};
use crate::spcl::SpclOperator;

use super::{nu_graph, Segmentation};

/// Birth/death record of one cluster in the merge forest.
///
/// `lifespan = birth - death` equals the cluster-maximum gap at merge time,
/// the same quantity `tau` thresholds. Essential clusters (one per connected
/// component) never die: infinite lifespan.
#[derive(Clone, Copy, Debug)]
pub struct PersistencePair<T: Real> {
    /// Field value of the cluster's seed (its maximum).
    pub birth: T,
    pub death: T,
    pub lifespan: T,
    pub essential: bool,
    /// Seed point of the cluster.
    pub seed: usize,
    /// Seed of the cluster this one merged into, for non-essential pairs.
    pub merged_into: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct PersistenceResult<T: Real> {
    pub segmentation: Segmentation<T>,
    /// All merges that would occur at any threshold, plus essential pairs.
    pub pairs: Vec<PersistencePair<T>>,
    /// Connected components of the neighborhood graph (> 1 is flagged, not an
    /// error; segmentation proceeds per component).
    pub components: usize,
}

struct MergeForest<T: Real> {
    /// Basin seed per point from steepest-ascent attachment.
    basin_seed: Vec<usize>,
    /// Merge record per seed: (into_seed, lifespan).
    merge_parent: HashMap<usize, (usize, T)>,
    /// Seeds that never merge, one per component.
    essential_seeds: Vec<usize>,
    pairs: Vec<PersistencePair<T>>,
}

/// Sweep once, recording every merge (threshold-independent).
fn build_merge_forest<T: Real>(adj: &[Vec<u32>], field: &[T]) -> MergeForest<T> {
    let n = field.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        field[b]
            .partial_cmp(&field[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut rank = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos;
    }

    // union-find over points; each root remembers its cluster seed
    let mut parent: Vec<usize> = (0..n).collect();
    let mut root_seed: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut basin_seed = vec![usize::MAX; n];
    let mut merge_parent: HashMap<usize, (usize, T)> = HashMap::new();
    let mut pairs: Vec<PersistencePair<T>> = Vec::new();

    for &x in &order {
        let mut best: Option<usize> = None;
        for &yq in &adj[x] {
            let y = yq as usize;
            if rank[y] < rank[x] {
                match best {
                    None => best = Some(y),
                    Some(b) if rank[y] < rank[b] => best = Some(y),
                    _ => {}
                }
            }
        }
        match best {
            None => {
                basin_seed[x] = x; // local maximum: new cluster
            }
            Some(n_star) => {
                basin_seed[x] = basin_seed[n_star];
                let rx = find(&mut parent, n_star);
                parent[x] = rx;

                // collect the distinct clusters adjoining x
                let mut roots: Vec<usize> = Vec::new();
                for &yq in &adj[x] {
                    let y = yq as usize;
                    if rank[y] < rank[x] {
                        let r = find(&mut parent, y);
                        if !roots.contains(&r) {
                            roots.push(r);
                        }
                    }
                }
                if roots.len() >= 2 {
                    // highest cluster maximum first, seed index tie-break
                    roots.sort_by(|&a, &b| {
                        field[root_seed[b]]
                            .partial_cmp(&field[root_seed[a]])
                            .unwrap_or(std::cmp::Ordering::Equal)
                            .then(root_seed[a].cmp(&root_seed[b]))
                    });
                    let target = roots[0];
                    let target_seed = root_seed[target];
                    for &r in &roots[1..] {
                        let dying_seed = root_seed[r];
                        let birth = field[dying_seed];
                        let lifespan = field[target_seed] - birth;
                        pairs.push(PersistencePair {
                            birth,
                            death: birth - lifespan,
                            lifespan,
                            essential: false,
                            seed: dying_seed,
                            merged_into: Some(target_seed),
                        });
                        merge_parent.insert(dying_seed, (target_seed, lifespan));
                        parent[r] = target;
                    }
                    root_seed[target] = target_seed;
                }
            }
        }
    }

    let mut essential_seeds: Vec<usize> = Vec::new();
    for i in 0..n {
        if find(&mut parent, i) == i {
            essential_seeds.push(root_seed[i]);
        }
    }
    essential_seeds.sort_unstable();
    for &seed in &essential_seeds {
        pairs.push(PersistencePair {
            birth: field[seed],
            death: T::neg_infinity(),
            lifespan: T::infinity(),
            essential: true,
            seed,
            merged_into: None,
        });
    }

    MergeForest {
        basin_seed,
        merge_parent,
        essential_seeds,
        pairs,
    }
}

impl<T: Real> MergeForest<T> {
    /// Seed of the cluster surviving at threshold `tau` that absorbs `seed`.
    fn surviving_seed(&self, mut seed: usize, tau: T) -> usize {
        loop {
            match self.merge_parent.get(&seed) {
                Some(&(into, lifespan)) if lifespan <= tau => seed = into,
                _ => return seed,
            }
        }
    }
}

/// Segment a per-point field at threshold `tau` over the top-`nu` operator
/// graph. Returns the labeling together with the threshold-independent pair
/// list.
pub fn persistence_segment<T: Real>(
    op: &SpclOperator<T>,
    field: &[T],
    nu: usize,
    tau: T,
) -> Result<PersistenceResult<T>> {
    persistence_segment_at(op, field, nu, tau, None)
}

/// Like [`persistence_segment`], recording the diffusion time the field was
/// computed at (used downstream by feature vectors).
pub fn persistence_segment_at<T: Real>(
    op: &SpclOperator<T>,
    field: &[T],
    nu: usize,
    tau: T,
    reference_scale: Option<T>,
) -> Result<PersistenceResult<T>> {
    if field.len() != op.len() {
        return Err(Error::invalid(format!(
            "field length {} does not match operator size {}",
            field.len(),
            op.len()
        )));
    }
    if nu < 1 {
        return Err(Error::invalid("nu must be at least 1"));
    }
    if !(tau >= T::zero()) {
        return Err(Error::invalid("tau must be nonnegative"));
    }
    let adj = nu_graph(op, nu);
    let forest = build_merge_forest(&adj, field);
    let components = forest.essential_seeds.len();
    if components > 1 {
        log::warn!("neighborhood graph has {components} connected components");
    }

    let segmentation = cut_forest(&forest, field, tau, reference_scale, nu)?;
    Ok(PersistenceResult {
        segmentation,
        pairs: forest.pairs,
        components,
    })
}

fn cut_forest<T: Real>(
    forest: &MergeForest<T>,
    field: &[T],
    tau: T,
    reference_scale: Option<T>,
    nu: usize,
) -> Result<Segmentation<T>> {
    let n = field.len();
    // surviving seeds, ordered by descending maximum then index
    let mut survivors: Vec<usize> = forest
        .pairs
        .iter()
        .filter(|p| p.essential || p.lifespan > tau)
        .map(|p| p.seed)
        .collect();
    survivors.sort_by(|&a, &b| {
        field[b]
            .partial_cmp(&field[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let seg_of_seed: HashMap<usize, u32> = survivors
        .iter()
        .enumerate()
        .map(|(s, &seed)| (seed, s as u32))
        .collect();

    let mut labels = vec![0u32; n];
    let mut resolve_cache: HashMap<usize, u32> = HashMap::new();
    for x in 0..n {
        let basin = forest.basin_seed[x];
        let label = match resolve_cache.get(&basin) {
            Some(&l) => l,
            None => {
                let surv = forest.surviving_seed(basin, tau);
                let l = *seg_of_seed
                    .get(&surv)
                    .ok_or_else(|| Error::invalid("merge forest cut produced unknown seed"))?;
                resolve_cache.insert(basin, l);
                l
            }
        };
        labels[x] = label;
    }

    let segment_max: Vec<(usize, T)> = survivors.iter().map(|&s| (s, field[s])).collect();
    Ok(Segmentation::new(
        labels,
        segment_max,
        reference_scale,
        Some(nu),
        Some(tau),
    ))
}

/// Threshold at which exactly `s` segments survive, derived from the pair
/// list: the midpoint between the s-th and (s+1)-th largest lifespans.
pub fn tau_for_segment_count<T: Real>(pairs: &[PersistencePair<T>], s: usize) -> Result<T> {
    let essential = pairs.iter().filter(|p| p.essential).count();
    if s < 1 || s > pairs.len() {
        return Err(Error::invalid(format!(
            "requested segment count {s} outside 1..={}",
            pairs.len()
        )));
    }
    if s < essential {
        return Err(Error::invalid(format!(
            "cannot reach {s} segments: the graph has {essential} connected components"
        )));
    }
    let mut lifespans: Vec<T> = pairs
        .iter()
        .filter(|p| !p.essential)
        .map(|p| p.lifespan)
        .collect();
    lifespans.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));

    let keep = s - essential; // finite-lifespan clusters that must survive
    let two = T::one() + T::one();
    if keep == 0 {
        // kill every finite cluster: sit exactly on the largest lifespan
        // (survival requires lifespan strictly greater than tau)
        return Ok(lifespans.first().copied().unwrap_or_else(T::zero));
    }
    if keep == lifespans.len() {
        // below every finite lifespan
        let min = *lifespans.last().unwrap();
        if !(min > T::zero()) {
            return Err(Error::AmbiguousLifespans {
                tied: vec![to_f64(min)],
            });
        }
        return Ok(min / two);
    }
    let upper = lifespans[keep - 1];
    let lower = lifespans[keep];
    if !(lower < upper) {
        return Err(Error::AmbiguousLifespans {
            tied: vec![to_f64(upper), to_f64(lower)],
        });
    }
    Ok((upper + lower) / two)
}

/// Drop segments holding fewer than `fraction * n` points; survivors are
/// re-densified over the remaining points. Returns the reduced segmentation
/// (indexing the compacted point sequence) and the culled original ids.
pub fn remove_small_segments<T: Real>(
    seg: &Segmentation<T>,
    fraction: T,
) -> Result<(Segmentation<T>, Vec<usize>)> {
    if !(fraction >= T::zero()) || fraction >= T::one() {
        return Err(Error::invalid("cull fraction must lie in [0, 1)"));
    }
    let n = seg.len();
    let sizes = seg.segment_sizes();
    let threshold = fraction * T::from_usize(n).unwrap();
    let keep: Vec<bool> = sizes
        .iter()
        .map(|&sz| T::from_usize(sz).unwrap() >= threshold)
        .collect();
    if keep.iter().all(|&k| !k) {
        return Err(Error::invalid("cull fraction removes every segment"));
    }

    let mut new_id = vec![u32::MAX; seg.segment_count()];
    let mut next = 0u32;
    for (s, &k) in keep.iter().enumerate() {
        if k {
            new_id[s] = next;
            next += 1;
        }
    }
    let mut culled = Vec::new();
    let mut labels = Vec::with_capacity(n);
    let mut old_to_new_point = vec![usize::MAX; n];
    for (p, &l) in seg.labels().iter().enumerate() {
        if keep[l as usize] {
            old_to_new_point[p] = labels.len();
            labels.push(new_id[l as usize]);
        } else {
            culled.push(p);
        }
    }
    let segment_max: Vec<(usize, T)> = (0..seg.segment_count())
        .filter(|&s| keep[s])
        .map(|s| {
            let (p, v) = seg.segment_max(s);
            (old_to_new_point[p], v)
        })
        .collect();
    Ok((
        Segmentation::new(labels, segment_max, seg.reference_scale(), seg.nu, seg.tau),
        culled,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;
    use crate::linalg::V3;
    use crate::spcl::assemble_spcl;

    fn grid_cloud(n: usize) -> PointCloud<f64> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push([i as f64, j as f64, 0.0]);
            }
        }
        PointCloud::from_points(pts).unwrap()
    }

    fn gaussian(x: f64, y: f64, cx: f64, cy: f64, amp: f64, sigma: f64) -> f64 {
        amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * sigma * sigma)).exp()
    }

    #[test]
    fn single_peak_gives_one_segment_for_any_tau() {
        let side = 12;
        let cloud = grid_cloud(side);
        let op = assemble_spcl(&cloud, 3.0).unwrap();
        let field: Vec<f64> = cloud
            .points()
            .iter()
            .map(|p| gaussian(p[0], p[1], 5.5, 5.5, 10.0, 4.0))
            .collect();
        for tau in [0.0, 0.5, 100.0] {
            let res = persistence_segment(&op, &field, 10, tau).unwrap();
            assert_eq!(res.segmentation.segment_count(), 1, "tau {tau}");
            assert_eq!(res.components, 1);
        }
    }

    #[test]
    fn infinite_tau_gives_one_segment_per_component() {
        let mut pts: Vec<V3<f64>> = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                pts.push([i as f64, j as f64, 0.0]);
                pts.push([i as f64 + 100.0, j as f64, 0.0]);
            }
        }
        let cloud = PointCloud::from_points(pts).unwrap();
        let op = assemble_spcl(&cloud, 3.0).unwrap();
        let field: Vec<f64> = cloud.points().iter().map(|p| (p[0] * 0.37).sin() + (p[1] * 0.61).cos()).collect();
        let res = persistence_segment(&op, &field, 10, f64::INFINITY).unwrap();
        assert_eq!(res.components, 2);
        assert_eq!(res.segmentation.segment_count(), 2);
        let essentials = res.pairs.iter().filter(|p| p.essential).count();
        assert_eq!(essentials, 2);
    }

    #[test]
    fn two_bumps_match_steepest_ascent_basins() {
        let side = 20;
        let cloud = grid_cloud(side);
        let op = assemble_spcl(&cloud, 3.0).unwrap();
        // two Gaussians with max gap 2.0
        let field: Vec<f64> = cloud
            .points()
            .iter()
            .map(|p| {
                gaussian(p[0], p[1], 4.0, 10.0, 10.0, 3.0)
                    + gaussian(p[0], p[1], 15.0, 9.0, 8.0, 3.0)
            })
            .collect();
        let res = persistence_segment(&op, &field, 10, 0.5).unwrap();
        assert_eq!(res.segmentation.segment_count(), 2);

        // brute-force steepest ascent on the same graph
        let adj = nu_graph(&op, 10);
        let n = cloud.len();
        let basin: Vec<usize> = (0..n)
            .map(|start| {
                let mut x = start;
                loop {
                    let mut best = x;
                    for &y in &adj[x] {
                        let y = y as usize;
                        if field[y] > field[best] || (field[y] == field[best] && y < best) {
                            best = y;
                        }
                    }
                    if best == x {
                        return x;
                    }
                    x = best;
                }
            })
            .collect();
        let seeds: Vec<usize> = {
            let mut s: Vec<usize> = basin.clone();
            s.sort_unstable();
            s.dedup();
            s
        };
        assert_eq!(seeds.len(), 2, "field should have exactly 2 basins");
        let mut agree = 0usize;
        for x in 0..n {
            let mine = res.segmentation.label(x);
            let oracle = if basin[x] == seeds[0] { 0 } else { 1 };
            // align labelings via segment maxima
            let seed0_label = res.segmentation.label(seeds[0]);
            let matches = if seed0_label == 0 {
                mine == oracle as u32
            } else {
                mine != oracle as u32
            };
            if matches {
                agree += 1;
            }
        }
        assert!(
            agree as f64 >= 0.95 * n as f64,
            "basin agreement {agree}/{n}"
        );
    }

    #[test]
    fn pairs_are_independent_of_tau_and_counts_monotone() {
        let side = 16;
        let cloud = grid_cloud(side);
        let op = assemble_spcl(&cloud, 3.0).unwrap();
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let field: Vec<f64> = (0..cloud.len()).map(|_| rng.random_range(0.0..1.0)).collect();

        let base = persistence_segment(&op, &field, 10, 0.0).unwrap();
        let mut last_count = usize::MAX;
        for tau in [0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.0] {
            let res = persistence_segment(&op, &field, 10, tau).unwrap();
            assert!(res.segmentation.segment_count() <= last_count);
            last_count = res.segmentation.segment_count();
            assert_eq!(res.pairs.len(), base.pairs.len());
            for (a, b) in res.pairs.iter().zip(&base.pairs) {
                assert_eq!(a.seed, b.seed);
                assert_eq!(a.essential, b.essential);
                if !a.essential {
                    assert_eq!(a.lifespan, b.lifespan);
                }
            }
        }
    }

    #[test]
    fn tau_for_segment_count_closed_loop() {
        let side = 16;
        let cloud = grid_cloud(side);
        let op = assemble_spcl(&cloud, 3.0).unwrap();
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let field: Vec<f64> = (0..cloud.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let base = persistence_segment(&op, &field, 10, 0.0).unwrap();
        let max_s = base.segmentation.segment_count();
        for s in 1..=max_s.min(12) {
            let tau = tau_for_segment_count(&base.pairs, s).unwrap();
            let res = persistence_segment(&op, &field, 10, tau).unwrap();
            assert_eq!(
                res.segmentation.segment_count(),
                s,
                "requested {s}, tau {tau}"
            );
        }
    }

    #[test]
    fn segment_max_is_exhaustive_max_and_partition_valid() {
        let side = 14;
        let cloud = grid_cloud(side);
        let op = assemble_spcl(&cloud, 3.0).unwrap();
        let field: Vec<f64> = cloud
            .points()
            .iter()
            .map(|p| {
                gaussian(p[0], p[1], 3.0, 3.0, 5.0, 2.0) + gaussian(p[0], p[1], 10.0, 9.0, 4.0, 2.5)
            })
            .collect();
        let res = persistence_segment(&op, &field, 10, 0.3).unwrap();
        let seg = &res.segmentation;
        // dense ids
        let mut seen = vec![false; seg.segment_count()];
        for &l in seg.labels() {
            seen[l as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
        // maxima
        for s in 0..seg.segment_count() {
            let (pid, val) = seg.segment_max(s);
            assert_eq!(seg.label(pid), s as u32);
            for x in 0..seg.len() {
                if seg.label(x) == s as u32 {
                    assert!(field[x] <= val);
                }
            }
        }
        // connectivity of each segment in the nu-graph
        let adj = nu_graph(&op, 10);
        for s in 0..seg.segment_count() {
            let members: Vec<usize> =
                (0..seg.len()).filter(|&x| seg.label(x) == s as u32).collect();
            let mut visited = vec![false; seg.len()];
            let mut stack = vec![members[0]];
            visited[members[0]] = true;
            let mut reached = 1;
            while let Some(x) = stack.pop() {
                for &y in &adj[x] {
                    let y = y as usize;
                    if !visited[y] && seg.label(y) == s as u32 {
                        visited[y] = true;
                        reached += 1;
                        stack.push(y);
                    }
                }
            }
            assert_eq!(reached, members.len(), "segment {s} disconnected");
        }
    }

    #[test]
    fn small_segment_removal() {
        // main grid plus a distant 5-point blob (own component)
        let mut pts: Vec<V3<f64>> = Vec::new();
        for i in 0..24 {
            for j in 0..24 {
                pts.push([i as f64, j as f64, 0.0]);
            }
        }
        let blob = [[0.0, 0.0], [1.0, 0.2], [0.4, 0.9], [1.3, 1.1], [0.2, 1.6]];
        for b in blob {
            pts.push([500.0 + b[0], b[1], 0.0]);
        }
        let cloud = PointCloud::from_points(pts).unwrap();
        let op = assemble_spcl(&cloud, 3.0).unwrap();
        let field: Vec<f64> = cloud.points().iter().map(|p| (0.2 * p[0]).sin() + 0.01 * p[1]).collect();
        let res = persistence_segment(&op, &field, 10, f64::INFINITY).unwrap();
        assert_eq!(res.components, 2);
        let n = cloud.len();

        let (reduced, culled) = remove_small_segments(&res.segmentation, 0.01).unwrap();
        assert_eq!(culled.len(), 5);
        assert!(culled.iter().all(|&p| p >= 24 * 24));
        assert_eq!(reduced.len() + culled.len(), n);
        assert_eq!(reduced.segment_count(), 1);

        // fraction 0 is the identity
        let (same, none) = remove_small_segments(&res.segmentation, 0.0).unwrap();
        assert!(none.is_empty());
        assert_eq!(same.labels(), res.segmentation.labels());
    }
}
