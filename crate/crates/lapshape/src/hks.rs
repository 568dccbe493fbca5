//! Heat-diffusion signatures from the operator's eigensystem: the per-point
//! heat kernel signature over a spectral schedule of diffusion times, the
//! dense heat kernel, and max-normalized feature vectors for retrieval.

use rayon::prelude::*;

use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::real::{cast, Real};
use crate::segmentation::Segmentation;

/// Dense heat kernels refuse to allocate above this point count unless the
/// caller raises the cap explicitly.
pub const DEFAULT_KERNEL_CAP: usize = 20_000;
/// CLI flag that raises the cap; named in the memory-guard error.
pub const KERNEL_CAP_FLAG: &str = "--kernel-cap";

/// Per-point heat kernel signature values over ascending diffusion times.
#[derive(Clone, Debug)]
pub struct HksField<T: Real> {
    t_scales: Vec<T>,
    /// Row-major `n x |t|`.
    values: Vec<T>,
    eig_count: usize,
    n: usize,
}

impl<T: Real> HksField<T> {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scale_count(&self) -> usize {
        self.t_scales.len()
    }

    pub fn t_scales(&self) -> &[T] {
        &self.t_scales
    }

    pub fn eig_count(&self) -> usize {
        self.eig_count
    }

    /// Signature of point `x` at scale index `s`.
    pub fn value(&self, x: usize, s: usize) -> T {
        self.values[x * self.t_scales.len() + s]
    }

    /// All scale values of point `x`.
    pub fn point_row(&self, x: usize) -> &[T] {
        let m = self.t_scales.len();
        &self.values[x * m..(x + 1) * m]
    }

    /// Per-point values at one scale.
    pub fn column(&self, s: usize) -> Vec<T> {
        (0..self.n).map(|x| self.value(x, s)).collect()
    }

    /// Index of the scale equal to `t` (within 1e-9 relative).
    pub fn scale_index(&self, t: T) -> Option<usize> {
        let tol = cast::<T>(1e-9);
        self.t_scales
            .iter()
            .position(|&s| (s - t).abs() <= tol * t.abs().max(s.abs()))
    }
}

/// Log-spaced diffusion times from `4 ln10 / lambda_{k-1}` up to
/// `4 ln10 / lambda_1`, endpoints exact.
pub fn default_t_scales<T: Real>(eigs: &EigenSystem<T>, m: usize) -> Result<Vec<T>> {
    if eigs.k() < 2 {
        return Err(Error::invalid("t-scale schedule needs at least 2 eigenpairs"));
    }
    if m < 1 {
        return Err(Error::invalid("scale count must be at least 1"));
    }
    let lambda_1 = eigs.eigenvalue(1);
    if !(lambda_1 > T::zero()) {
        return Err(Error::DisconnectedModel { components: 2 });
    }
    let lambda_max = eigs.eigenvalue(eigs.k() - 1);
    let four_ln10 = cast::<T>(4.0) * cast::<T>(10.0f64).ln();
    let t_min = four_ln10 / lambda_max;
    let t_max = four_ln10 / lambda_1;
    if m == 1 {
        return Ok(vec![t_min]);
    }
    let ln_min = t_min.ln();
    let ln_max = t_max.ln();
    let step = (ln_max - ln_min) / T::from_usize(m - 1).unwrap();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        if i == 0 {
            out.push(t_min);
        } else if i == m - 1 {
            out.push(t_max);
        } else {
            out.push((ln_min + step * T::from_usize(i).unwrap()).exp());
        }
    }
    Ok(out)
}

/// `hks[x][t] = sum_i exp(-lambda_i t) phi_i(x)^2`, constant term included.
pub fn compute_hks<T: Real>(eigs: &EigenSystem<T>, t_scales: &[T]) -> Result<HksField<T>> {
    if t_scales.iter().any(|&t| !(t > T::zero())) {
        return Err(Error::invalid("diffusion times must be positive"));
    }
    let n = eigs.len();
    let k = eigs.k();
    let m = t_scales.len();
    let mut values = vec![T::zero(); n * m];
    values
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(x, row)| {
            for (s, &t) in t_scales.iter().enumerate() {
                let mut acc = T::zero();
                for i in 0..k {
                    let phi = eigs.eigenvector(i)[x];
                    acc += (-eigs.eigenvalue(i) * t).exp() * phi * phi;
                }
                row[s] = acc;
            }
        });
    Ok(HksField {
        t_scales: t_scales.to_vec(),
        values,
        eig_count: k,
        n,
    })
}

/// Dense symmetric heat kernel at one diffusion time.
#[derive(Clone, Debug)]
pub struct HeatKernelMatrix<T: Real> {
    t: T,
    n: usize,
    /// Row-major, upper triangle mirrored so symmetry is exact.
    entries: Vec<T>,
    negative_entries: usize,
}

impl<T: Real> HeatKernelMatrix<T> {
    pub fn t(&self) -> T {
        self.t
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entry(&self, x: usize, y: usize) -> T {
        self.entries[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.entries[x * self.n..(x + 1) * self.n]
    }

    /// Count of truncation-induced negative entries (flagged, not an error).
    pub fn negative_entries(&self) -> usize {
        self.negative_entries
    }
}

pub fn compute_heat_kernel<T: Real>(eigs: &EigenSystem<T>, t: T) -> Result<HeatKernelMatrix<T>> {
    compute_heat_kernel_with_cap(eigs, t, DEFAULT_KERNEL_CAP)
}

/// `k_t(x, y) = sum_i exp(-lambda_i t) phi_i(x) phi_i(y)` as a dense matrix;
/// `n^2` storage, guarded by `cap`.
pub fn compute_heat_kernel_with_cap<T: Real>(
    eigs: &EigenSystem<T>,
    t: T,
    cap: usize,
) -> Result<HeatKernelMatrix<T>> {
    if !(t > T::zero()) {
        return Err(Error::invalid("diffusion time must be positive"));
    }
    let n = eigs.len();
    if n > cap {
        return Err(Error::MemoryGuard {
            points: n,
            cap,
            override_flag: KERNEL_CAP_FLAG,
        });
    }
    let k = eigs.k();
    let decays: Vec<T> = (0..k).map(|i| (-eigs.eigenvalue(i) * t).exp()).collect();

    let mut entries = vec![T::zero(); n * n];
    // upper triangle (including diagonal), then mirror
    entries
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(x, row)| {
            for y in x..n {
                let mut acc = T::zero();
                for i in 0..k {
                    acc += decays[i] * eigs.eigenvector(i)[x] * eigs.eigenvector(i)[y];
                }
                row[y] = acc;
            }
        });
    for x in 0..n {
        for y in 0..x {
            entries[x * n + y] = entries[y * n + x];
        }
    }
    let negative_entries = entries.iter().filter(|&&e| e < T::zero()).count();
    if negative_entries > 0 {
        log::warn!("heat kernel truncation produced {negative_entries} negative entries");
    }
    Ok(HeatKernelMatrix {
        t,
        n,
        entries,
        negative_entries,
    })
}

/// An `m x m` matrix of signature values: one row per feature point (the
/// within-segment signature maximum), one column per scale, scaled so the
/// largest entry is exactly 1.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<T: Real> {
    /// Row-major `m x m`.
    rows: Vec<T>,
    m: usize,
    feature_point_ids: Vec<usize>,
}

impl<T: Real> FeatureVector<T> {
    pub fn from_rows(rows: Vec<T>, m: usize, feature_point_ids: Vec<usize>) -> Self {
        debug_assert_eq!(rows.len(), m * m);
        FeatureVector {
            rows,
            m,
            feature_point_ids,
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.m..(i + 1) * self.m]
    }

    pub fn entries(&self) -> &[T] {
        &self.rows
    }

    pub fn feature_point_ids(&self) -> &[usize] {
        &self.feature_point_ids
    }
}

/// Build the feature vector of a segmentation with exactly `m` segments from
/// a signature field with at least `m` scales (the first `m` are used).
pub fn build_feature_vector<T: Real>(
    hks: &HksField<T>,
    seg: &Segmentation<T>,
    m: usize,
) -> Result<FeatureVector<T>> {
    if seg.segment_count() != m {
        return Err(Error::invalid(format!(
            "feature vector needs exactly {m} segments, segmentation has {}",
            seg.segment_count()
        )));
    }
    if hks.scale_count() < m {
        return Err(Error::invalid(format!(
            "feature vector needs at least {m} scales, field has {}",
            hks.scale_count()
        )));
    }
    if hks.len() != seg.len() {
        return Err(Error::invalid("field and segmentation sizes differ"));
    }
    let ref_scale = seg
        .reference_scale()
        .ok_or_else(|| Error::invalid("segmentation carries no reference scale"))?;
    let ref_idx = hks
        .scale_index(ref_scale)
        .ok_or_else(|| Error::invalid("segmentation reference scale not among field scales"))?;

    // within-segment argmax at the reference scale, lowest index on ties
    let mut best: Vec<Option<usize>> = vec![None; m];
    for x in 0..hks.len() {
        let s = seg.label(x) as usize;
        match best[s] {
            None => best[s] = Some(x),
            Some(b) if hks.value(x, ref_idx) > hks.value(b, ref_idx) => best[s] = Some(x),
            _ => {}
        }
    }
    let mut feature_points: Vec<usize> = best
        .into_iter()
        .map(|b| b.expect("every segment is nonempty"))
        .collect();
    // rows ordered by descending reference-scale value
    feature_points.sort_by(|&a, &b| {
        hks.value(b, ref_idx)
            .partial_cmp(&hks.value(a, ref_idx))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut rows = Vec::with_capacity(m * m);
    for &fp in &feature_points {
        rows.extend_from_slice(&hks.point_row(fp)[0..m]);
    }
    let max = rows
        .iter()
        .fold(T::neg_infinity(), |acc, &v| if v > acc { v } else { acc });
    if !(max > T::zero()) {
        return Err(Error::invalid("signature values must be positive"));
    }
    for v in rows.iter_mut() {
        *v = *v / max;
    }
    Ok(FeatureVector {
        rows,
        m,
        feature_point_ids: feature_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;
    use crate::linalg::V3;
    use crate::segmentation::persistence_segment_at;
    use crate::spcl::assemble_spcl;
    use crate::{solve_eigs, SpclOperator};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wavy(n: usize, seed: u64) -> PointCloud<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<V3<f64>> = (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(0.0..3.0);
                let y: f64 = rng.random_range(0.0..3.0);
                [x, y, 0.3 * (x * 1.7).sin() + 0.2 * (y * 2.3).cos()]
            })
            .collect();
        PointCloud::from_points(pts).unwrap()
    }

    fn fixture() -> (PointCloud<f64>, SpclOperator<f64>, crate::EigenSystem<f64>) {
        let cloud = wavy(400, 3);
        let op = assemble_spcl(&cloud, cloud.spacing() * 6.0).unwrap();
        let eigs = solve_eigs(&op, 40).unwrap();
        (cloud, op, eigs)
    }

    #[test]
    fn t_scale_schedule_shape() {
        let (_, _, eigs) = fixture();
        let scales = default_t_scales(&eigs, 15).unwrap();
        assert_eq!(scales.len(), 15);
        let four_ln10 = 4.0 * 10f64.ln();
        assert_eq!(scales[0], four_ln10 / eigs.eigenvalue(eigs.k() - 1));
        assert_eq!(scales[14], four_ln10 / eigs.eigenvalue(1));
        for w in scales.windows(2) {
            assert!(w[0] < w[1], "schedule must increase strictly");
        }
        let single = default_t_scales(&eigs, 1).unwrap();
        assert_eq!(single, vec![four_ln10 / eigs.eigenvalue(eigs.k() - 1)]);
    }

    #[test]
    fn hks_positive_and_non_increasing() {
        let (_, _, eigs) = fixture();
        let scales = default_t_scales(&eigs, 12).unwrap();
        let hks = compute_hks(&eigs, &scales).unwrap();
        for x in 0..hks.len() {
            let row = hks.point_row(x);
            for &v in row {
                assert!(v > 0.0);
            }
            for w in row.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "HKS must not increase with t");
            }
        }
    }

    #[test]
    fn hks_becomes_constant_at_huge_t() {
        let (_, _, eigs) = fixture();
        let t = 1e6 / eigs.eigenvalue(1);
        let hks = compute_hks(&eigs, &[t]).unwrap();
        let first = hks.value(0, 0);
        for x in 0..hks.len() {
            assert!((hks.value(x, 0) - first).abs() <= 1e-6 * first.abs());
        }
    }

    #[test]
    fn heat_kernel_diagonal_matches_hks_and_conserves_mass() {
        let (_, op, eigs) = fixture();
        let scales = default_t_scales(&eigs, 5).unwrap();
        let t = scales[2];
        let kernel = compute_heat_kernel(&eigs, t).unwrap();
        let hks = compute_hks(&eigs, &[t]).unwrap();
        for x in 0..kernel.len() {
            assert!((kernel.entry(x, x) - hks.value(x, 0)).abs() <= 1e-12);
            for y in 0..kernel.len() {
                assert_eq!(
                    kernel.entry(x, y).to_bits(),
                    kernel.entry(y, x).to_bits(),
                    "exact symmetry"
                );
            }
            let weighted: f64 = (0..kernel.len())
                .map(|y| kernel.entry(x, y) * op.mass(y))
                .sum();
            assert!(
                (weighted - 1.0).abs() <= 1e-6,
                "mass-weighted row sum {weighted} at {x}"
            );
        }
    }

    #[test]
    fn kernel_memory_guard_names_flag() {
        let (_, _, eigs) = fixture();
        match compute_heat_kernel_with_cap(&eigs, 0.1, 10) {
            Err(Error::MemoryGuard { override_flag, .. }) => {
                assert_eq!(override_flag, KERNEL_CAP_FLAG)
            }
            other => panic!("expected memory guard, got {other:?}"),
        }
    }

    #[test]
    fn feature_vector_normalized_and_per_segment() {
        let (_, op, eigs) = fixture();
        let scales = default_t_scales(&eigs, 8).unwrap();
        let hks = compute_hks(&eigs, &scales).unwrap();
        let field = hks.column(0);
        let base = persistence_segment_at(&op, &field, 10, 0.0, Some(scales[0])).unwrap();
        let m = 8.min(base.segmentation.segment_count());
        let tau =
            crate::segmentation::tau_for_segment_count(&base.pairs, m).unwrap();
        let seg = persistence_segment_at(&op, &field, 10, tau, Some(scales[0]))
            .unwrap()
            .segmentation;
        let fv = build_feature_vector(&hks, &seg, m).unwrap();

        let max = fv.entries().iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(max, 1.0, "max entry must be exactly 1");
        assert!(fv.entries().iter().all(|&v| v > 0.0 && v <= 1.0));

        // one feature point per segment, each a within-segment argmax
        let mut segs_seen: Vec<u32> = fv
            .feature_point_ids()
            .iter()
            .map(|&fp| seg.label(fp))
            .collect();
        segs_seen.sort_unstable();
        segs_seen.dedup();
        assert_eq!(segs_seen.len(), m);
        for &fp in fv.feature_point_ids() {
            let s = seg.label(fp);
            for x in 0..seg.len() {
                if seg.label(x) == s {
                    assert!(field[x] <= field[fp]);
                }
            }
        }

        // determinism
        let fv2 = build_feature_vector(&hks, &seg, m).unwrap();
        assert_eq!(fv, fv2);
    }

    #[test]
    fn feature_vector_m1_is_unit() {
        let (_, op, eigs) = fixture();
        let scales = default_t_scales(&eigs, 3).unwrap();
        let hks = compute_hks(&eigs, &scales).unwrap();
        let field = hks.column(0);
        let res = persistence_segment_at(&op, &field, 10, f64::INFINITY, Some(scales[0])).unwrap();
        assert_eq!(res.segmentation.segment_count(), 1);
        let fv = build_feature_vector(&hks, &res.segmentation, 1).unwrap();
        assert_eq!(fv.entries(), &[1.0]);
    }

    #[test]
    fn segment_count_mismatch_rejected() {
        let (_, op, eigs) = fixture();
        let scales = default_t_scales(&eigs, 6).unwrap();
        let hks = compute_hks(&eigs, &scales).unwrap();
        let field = hks.column(0);
        let res = persistence_segment_at(&op, &field, 10, f64::INFINITY, Some(scales[0])).unwrap();
        let err = build_feature_vector(&hks, &res.segmentation, 6).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('6') && msg.contains('1'), "{msg}");
    }
}
