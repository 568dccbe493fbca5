//! Heat-walk segmentation: iterate exemplar voting over the dense heat
//! kernel until fixed point, then split off near-uniform "dissipator" points
//! by comparing Kullback-Leibler divergences.

use rayon::prelude::*;

use crate::hks::HeatKernelMatrix;
use crate::real::Real;

use super::Segmentation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assignment {
    Exemplar(usize),
    Dissipator,
}

#[derive(Clone, Debug)]
pub struct HeatWalkResult<T: Real> {
    /// Distinct exemplar points at the fixed point, ascending.
    pub exemplars: Vec<usize>,
    /// Per-point region: its exemplar, or the dissipator.
    pub assignment: Vec<Assignment>,
    /// Exemplar vote per point before the dissipator split.
    pub exemplar_of: Vec<usize>,
    /// Heat potentials at the fixed point.
    pub potentials: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Negative kernel entries were clamped for the density computations.
    pub clamped_negatives: bool,
}

pub const HEAT_WALK_ITERATION_CAP: usize = 200;

/// One voting update: exemplar per point from the current potentials, then
/// potentials refreshed over the new exemplar set.
pub fn heat_walk_step<T: Real>(
    kernel: &HeatKernelMatrix<T>,
    potentials: &[T],
) -> (Vec<usize>, Vec<T>) {
    let n = kernel.len();
    let exemplar: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|x| {
            let row = kernel.row(x);
            let mut best = 0usize;
            let mut best_v = row[0].min(potentials[0]);
            for y in 1..n {
                let v = row[y].min(potentials[y]);
                if v > best_v {
                    best = y;
                    best_v = v;
                }
            }
            best
        })
        .collect();
    let mut members = exemplar.clone();
    members.sort_unstable();
    members.dedup();
    let next: Vec<T> = (0..n)
        .into_par_iter()
        .map(|x| {
            let row = kernel.row(x);
            let mut best = T::neg_infinity();
            for &y in &members {
                let v = row[y].min(potentials[y]);
                if v > best {
                    best = v;
                }
            }
            best
        })
        .collect();
    (exemplar, next)
}

/// Run the heat walk to a fixed point (exemplars and potentials both stable)
/// or the iteration cap, then partition into accumulator regions and a
/// dissipator.
pub fn heat_walk<T: Real>(kernel: &HeatKernelMatrix<T>) -> HeatWalkResult<T> {
    let n = kernel.len();
    let mut potentials: Vec<T> = (0..n).map(|x| kernel.entry(x, x)).collect();
    let mut exemplar: Vec<usize> = vec![usize::MAX; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < HEAT_WALK_ITERATION_CAP {
        let (e_next, s_next) = heat_walk_step(kernel, &potentials);
        iterations += 1;
        let stable = e_next == exemplar
            && s_next
                .iter()
                .zip(&potentials)
                .all(|(a, b)| a.partial_cmp(b) == Some(std::cmp::Ordering::Equal));
        exemplar = e_next;
        potentials = s_next;
        if stable {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("heat walk hit the iteration cap of {HEAT_WALK_ITERATION_CAP}");
    }

    let mut exemplars = exemplar.clone();
    exemplars.sort_unstable();
    exemplars.dedup();

    // densities; truncation negatives clamp to zero
    let clamped_negatives = kernel.negative_entries() > 0;
    let clamp = |v: T| if v > T::zero() { v } else { T::zero() };
    let row_sums: Vec<T> = (0..n)
        .map(|x| kernel.row(x).iter().fold(T::zero(), |a, &v| a + clamp(v)))
        .collect();
    // region density p_i(y) = sum_{x in i} k(x, y) / total region mass
    let mut region_of: Vec<usize> = vec![0; n];
    for (x, &e) in exemplar.iter().enumerate() {
        region_of[x] = exemplars.binary_search(&e).expect("exemplar present");
    }
    let mut region_rows: Vec<Vec<T>> = vec![vec![T::zero(); n]; exemplars.len()];
    let mut region_mass: Vec<T> = vec![T::zero(); exemplars.len()];
    for x in 0..n {
        let r = region_of[x];
        region_mass[r] += row_sums[x];
        let row = kernel.row(x);
        for y in 0..n {
            region_rows[r][y] += clamp(row[y]);
        }
    }

    let uniform = T::one() / T::from_usize(n).unwrap();
    let assignment: Vec<Assignment> = (0..n)
        .into_par_iter()
        .map(|x| {
            let row = kernel.row(x);
            let total = row_sums[x];
            if !(total > T::zero()) {
                return Assignment::Dissipator;
            }
            let r = region_of[x];
            let mut kld_uniform = T::zero();
            let mut kld_region = T::zero();
            for y in 0..n {
                let p = clamp(row[y]) / total;
                if p > T::zero() {
                    kld_uniform += p * (p / uniform).ln();
                    let q = region_rows[r][y] / region_mass[r];
                    if q > T::zero() {
                        kld_region += p * (p / q).ln();
                    } else {
                        kld_region = T::infinity();
                    }
                }
            }
            if kld_uniform < kld_region {
                Assignment::Dissipator
            } else {
                Assignment::Exemplar(exemplar[x])
            }
        })
        .collect();

    HeatWalkResult {
        exemplars,
        assignment,
        exemplar_of: exemplar,
        potentials,
        iterations,
        converged,
        clamped_negatives,
    }
}

impl<T: Real> HeatWalkResult<T> {
    /// Accumulator regions (by exemplar, ascending) plus a trailing dissipator
    /// segment when nonempty. The per-segment criterion is the initial heat
    /// potential at the exemplar; the dissipator gets the mean signature of
    /// the remaining points.
    pub fn to_segmentation(&self, kernel: &HeatKernelMatrix<T>) -> Segmentation<T> {
        let n = self.assignment.len();
        let has_dissipator = self
            .assignment
            .iter()
            .any(|a| matches!(a, Assignment::Dissipator));
        let seg_count = self.exemplars.len() + usize::from(has_dissipator);

        let mut labels = vec![0u32; n];
        for (x, a) in self.assignment.iter().enumerate() {
            labels[x] = match a {
                Assignment::Exemplar(e) => {
                    self.exemplars.binary_search(e).expect("known exemplar") as u32
                }
                Assignment::Dissipator => (seg_count - 1) as u32,
            };
        }

        let mut segment_max: Vec<(usize, T)> = self
            .exemplars
            .iter()
            .map(|&e| (e, kernel.entry(e, e)))
            .collect();
        if has_dissipator {
            let mut sum = T::zero();
            let mut count = 0usize;
            let mut first = usize::MAX;
            for (x, a) in self.assignment.iter().enumerate() {
                if matches!(a, Assignment::Dissipator) {
                    if first == usize::MAX {
                        first = x;
                    }
                } else {
                    sum += kernel.entry(x, x);
                    count += 1;
                }
            }
            let mean = if count > 0 {
                sum / T::from_usize(count).unwrap()
            } else {
                T::zero()
            };
            segment_max.push((first, mean));
        }
        Segmentation::new(labels, segment_max, Some(kernel.t()), None, None)
    }
}
