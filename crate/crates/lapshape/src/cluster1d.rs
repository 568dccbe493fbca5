//! Small 1D clustering utilities shared by the operator's ring estimate, the
//! curvature segmenter, and segment-type grouping.

use crate::real::Real;

/// Deterministic 1D k-means.
///
/// Centers start at evenly spaced order statistics of the values (for k = 3:
/// min, median, max). Assignment ties go to the lower cluster index; empty
/// clusters keep their previous center. Returns a label per value with
/// clusters numbered by ascending center.
pub fn kmeans_1d<T: Real>(values: &[T], k: usize, max_iter: usize) -> Vec<usize> {
    assert!(k >= 1);
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sorted: Vec<T> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut centers: Vec<T> = (0..k)
        .map(|c| {
            let pos = if k == 1 { 0 } else { c * (n - 1) / (k - 1) };
            sorted[pos]
        })
        .collect();

    let mut labels = vec![0usize; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, &v) in values.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = (v - centers[0]).abs();
            for (c, &ctr) in centers.iter().enumerate().skip(1) {
                let d = (v - ctr).abs();
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![T::zero(); k];
        let mut counts = vec![0usize; k];
        for (i, &v) in values.iter().enumerate() {
            sums[labels[i]] += v;
            counts[labels[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c] / T::from_usize(counts[c]).unwrap();
            }
        }
        if !changed {
            break;
        }
    }

    // renumber so cluster ids ascend with center value
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        centers[a]
            .partial_cmp(&centers[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut rank = vec![0usize; k];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    labels.iter().map(|&l| rank[l]).collect()
}

/// Cut sorted 1D values into `k` groups at the `k - 1` largest gaps
/// (single-linkage grouping on a number line). Returns a group label per
/// value, groups numbered by ascending value; gap ties cut leftmost first.
pub fn single_linkage_1d<T: Real>(values: &[T], k: usize) -> Vec<usize> {
    let n = values.len();
    assert!(k >= 1 && k <= n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    // gaps between consecutive sorted values, largest k-1 become cuts
    let mut gaps: Vec<(T, usize)> = (1..n)
        .map(|pos| (values[order[pos]] - values[order[pos - 1]], pos))
        .collect();
    gaps.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let mut cuts: Vec<usize> = gaps.iter().take(k - 1).map(|&(_, pos)| pos).collect();
    cuts.sort_unstable();

    let mut labels = vec![0usize; n];
    let mut group = 0usize;
    let mut next_cut = 0usize;
    for (pos, &idx) in order.iter().enumerate() {
        if next_cut < cuts.len() && pos == cuts[next_cut] {
            group += 1;
            next_cut += 1;
        }
        labels[idx] = group;
    }
    labels
}
