//! Grouping segments into types: single-linkage merging of a per-segment
//! scalar criterion (the zero-dimensional filtration of its value gaps), and
//! the intra-plus-inter clustering balance used to pick a natural group
//! count.

use crate::cluster1d::single_linkage_1d;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug)]
pub enum TypeStop<T: Real> {
    TypeCount(usize),
    /// Merge while the next value gap is at or below this threshold.
    Threshold(T),
}

#[derive(Clone, Debug)]
pub struct TypeGrouping<T: Real> {
    /// Dense type id per segment, ordered by ascending criterion value.
    pub segment_type: Vec<u32>,
    pub type_count: usize,
    /// Every gap scale of the filtration, ascending (merge order).
    pub merge_thresholds: Vec<T>,
}

/// Group segments whose criterion values sit close on the number line.
pub fn recluster_by_type<T: Real>(
    criterion: &[T],
    stop: TypeStop<T>,
) -> Result<TypeGrouping<T>> {
    let n = criterion.len();
    if n == 0 {
        return Err(Error::invalid("no segments to group"));
    }
    let mut sorted: Vec<T> = criterion.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut merge_thresholds: Vec<T> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    merge_thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let type_count = match stop {
        TypeStop::TypeCount(c) => {
            if c < 1 || c > n {
                return Err(Error::invalid(format!(
                    "type count {c} outside 1..={n}"
                )));
            }
            c
        }
        TypeStop::Threshold(th) => {
            if !(th >= T::zero()) {
                return Err(Error::invalid("threshold must be nonnegative"));
            }
            1 + merge_thresholds.iter().filter(|&&g| g > th).count()
        }
    };
    let labels = single_linkage_1d(criterion, type_count);
    Ok(TypeGrouping {
        segment_type: labels.into_iter().map(|l| l as u32).collect(),
        type_count,
        merge_thresholds,
    })
}

#[derive(Clone, Debug)]
pub struct BalanceScan<T: Real> {
    pub ks: Vec<usize>,
    pub scores: Vec<T>,
    /// k minimizing the balance; ties go to the smaller k.
    pub argmin_k: usize,
}

/// For each k in `k_range`, single-linkage the values into k groups and score
/// `balance(k) = sum of squared deviations from group centroids + sum of
/// squared deviations of group centroids from the global centroid`.
pub fn clustering_balance<T: Real>(
    values: &[T],
    k_range: std::ops::RangeInclusive<usize>,
) -> Result<BalanceScan<T>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid("clustering balance needs at least 2 values"));
    }
    let global = values.iter().fold(T::zero(), |a, &v| a + v) / T::from_usize(n).unwrap();
    let mut ks = Vec::new();
    let mut scores = Vec::new();
    for k in k_range {
        if k < 1 || k > n {
            continue;
        }
        let labels = single_linkage_1d(values, k);
        let mut sums = vec![T::zero(); k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums[l] += values[i];
            counts[l] += 1;
        }
        let centroids: Vec<T> = (0..k)
            .map(|g| sums[g] / T::from_usize(counts[g].max(1)).unwrap())
            .collect();
        let mut intra = T::zero();
        for (i, &l) in labels.iter().enumerate() {
            let d = values[i] - centroids[l];
            intra += d * d;
        }
        let mut inter = T::zero();
        for &c in &centroids {
            let d = c - global;
            inter += d * d;
        }
        ks.push(k);
        scores.push(intra + inter);
    }
    if ks.is_empty() {
        return Err(Error::invalid("empty k range"));
    }
    let mut best = 0usize;
    for i in 1..ks.len() {
        if scores[i] < scores[best] {
            best = i;
        }
    }
    Ok(BalanceScan {
        argmin_k: ks[best],
        ks,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_values_form_one_type() {
        let g = recluster_by_type(&[0.5; 6], TypeStop::Threshold(0.1)).unwrap();
        assert_eq!(g.type_count, 1);
        assert!(g.segment_type.iter().all(|&t| t == 0));
    }

    #[test]
    fn two_clusters_match_brute_force_single_linkage() {
        let values = [0.10, 0.11, 0.90, 0.91];
        let g = recluster_by_type(&values, TypeStop::TypeCount(2)).unwrap();
        assert_eq!(g.segment_type, vec![0, 0, 1, 1]);
        // brute force over all 2-partitions preserving the line order
        let mut best = (f64::INFINITY, 0usize);
        for cut in 1..values.len() {
            let mut sorted = values;
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let max_gap_in = |xs: &[f64]| {
                xs.windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(0.0f64, f64::max)
            };
            let score = max_gap_in(&sorted[..cut]).max(max_gap_in(&sorted[cut..]));
            if score < best.0 {
                best = (score, cut);
            }
        }
        assert_eq!(best.1, 2, "largest gap sits in the middle");
    }

    #[test]
    fn threshold_extremes() {
        let values = [0.1, 0.1, 0.4, 0.8];
        let zero = recluster_by_type(&values, TypeStop::Threshold(0.0)).unwrap();
        assert_eq!(zero.type_count, 3, "one type per distinct value");
        let inf = recluster_by_type(&values, TypeStop::Threshold(f64::INFINITY)).unwrap();
        assert_eq!(inf.type_count, 1);
    }

    #[test]
    fn merge_thresholds_are_all_gaps_ascending() {
        let values = [0.0, 1.0, 1.5, 4.0];
        let g = recluster_by_type(&values, TypeStop::TypeCount(1)).unwrap();
        assert_eq!(g.merge_thresholds, vec![0.5, 1.0, 2.5]);
    }

    #[test]
    fn balance_prefers_two_separated_groups() {
        let values = [0.0, 0.01, 0.02, 1.0, 1.01, 1.02];
        let scan = clustering_balance(&values, 1..=5).unwrap();
        assert_eq!(scan.argmin_k, 2);
    }

    #[test]
    fn balance_of_constant_values_is_one_group() {
        let values = [3.0; 5];
        let scan = clustering_balance(&values, 1..=5).unwrap();
        assert_eq!(scan.argmin_k, 1);
    }
}
