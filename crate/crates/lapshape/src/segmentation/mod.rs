//! Segmenters operating on signature fields and geometry: persistence
//! clustering over the operator's neighborhood graph, the heat-walk
//! exemplar method, curvature-aware seeded growth, and segment-type
//! regrouping.

mod curvature;
mod heatwalk;
mod persistence;
mod types;

pub use curvature::{curvature_segment, CurvatureStop};
pub use heatwalk::{heat_walk, heat_walk_step, Assignment, HeatWalkResult, HEAT_WALK_ITERATION_CAP};
pub use persistence::{
    persistence_segment, persistence_segment_at, remove_small_segments, tau_for_segment_count,
    PersistencePair, PersistenceResult,
};
pub use types::{clustering_balance, recluster_by_type, BalanceScan, TypeGrouping, TypeStop};

use crate::real::Real;
use crate::spcl::SpclOperator;

/// A labeling of every point into dense segment ids, with the per-segment
/// criterion maximum and the parameters that produced it.
#[derive(Clone, Debug)]
pub struct Segmentation<T: Real> {
    labels: Vec<u32>,
    /// Per segment: (point id, criterion value) of the segment maximum.
    segment_max: Vec<(usize, T)>,
    /// Diffusion time of the criterion field, when one applies.
    reference_scale: Option<T>,
    /// Neighborhood width and merge threshold, when they apply.
    pub nu: Option<usize>,
    pub tau: Option<T>,
}

impl<T: Real> Segmentation<T> {
    pub(crate) fn new(
        labels: Vec<u32>,
        segment_max: Vec<(usize, T)>,
        reference_scale: Option<T>,
        nu: Option<usize>,
        tau: Option<T>,
    ) -> Self {
        debug_assert!(!segment_max.is_empty());
        debug_assert!(labels.iter().all(|&l| (l as usize) < segment_max.len()));
        Segmentation {
            labels,
            segment_max,
            reference_scale,
            nu,
            tau,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, point: usize) -> u32 {
        self.labels[point]
    }

    pub fn segment_count(&self) -> usize {
        self.segment_max.len()
    }

    /// (point id, criterion value) of segment `s`'s maximum.
    pub fn segment_max(&self, s: usize) -> (usize, T) {
        self.segment_max[s]
    }

    pub fn reference_scale(&self) -> Option<T> {
        self.reference_scale
    }

    pub fn segment_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.segment_count()];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

/// The operator's neighborhood graph: top-`nu` weight magnitudes per row,
/// symmetrized by union. Adjacency lists are sorted ascending.
pub fn nu_graph<T: Real>(op: &SpclOperator<T>, nu: usize) -> Vec<Vec<u32>> {
    let n = op.len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in op.row_neighbors(i).into_iter().take(nu) {
            adj[i].push(j as u32);
            adj[j].push(i as u32);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}
