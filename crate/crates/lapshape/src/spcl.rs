//! The symmetric point-cloud Laplacian: a sparse stiffness matrix W-hat with a
//! diagonal mass matrix, assembled row-by-row from local tangent frames.
//!
//! Row `i` weights its frame neighbors by Gaussian-damped in-plane distances
//! and representative triangle areas, the matrix is averaged with its
//! transpose, and the diagonal is then recomputed as the negative row sum so
//! the operator annihilates constants exactly.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::cluster1d::kmeans_1d;
use crate::error::{Error, Result};
use crate::frame::{build_local_frame, triangulate_frame};
use crate::real::{cast, Real};

/// Default neighborhood radius in units of the cloud spacing.
pub const DEFAULT_RADIUS_MULTIPLIER: f64 = 3.0;
/// Default Gaussian bandwidth as a fraction of the neighborhood radius.
pub const DEFAULT_BANDWIDTH_FRACTION: f64 = 1.0 / 6.0;

/// Sparse symmetric Laplacian plus diagonal mass matrix.
///
/// Off-diagonal entries are stored in CSR form with both `(i, j)` and
/// `(j, i)` carrying the same value bits, so the matrix equals its transpose
/// exactly. The diagonal is kept separately.
#[derive(Clone, Debug)]
pub struct SpclOperator<T: Real> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<T>,
    diag: Vec<T>,
    mass: Vec<T>,
    radius_r: T,
    bandwidth_eps: T,
}

/// Nested neighborhood estimate from one operator row; the three sets are
/// cumulative, outermost holding every nonzero of the row.
#[derive(Clone, Debug)]
pub struct RingEstimate {
    pub rings: [Vec<usize>; 3],
    /// Set when the row had fewer than 3 distinct weight magnitudes.
    pub degenerate: bool,
}

impl<T: Real> SpclOperator<T> {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn radius(&self) -> T {
        self.radius_r
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth_eps
    }

    /// Off-diagonal nonzeros of row `i` in ascending column order.
    pub fn row(&self, i: usize) -> (&[u32], &[T]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn diag(&self, i: usize) -> T {
        self.diag[i]
    }

    /// Mass matrix entry `B_ii` (representative area over 3).
    pub fn mass(&self, i: usize) -> T {
        self.mass[i]
    }

    pub fn mass_diagonal(&self) -> &[T] {
        &self.mass
    }

    pub fn nnz_off_diagonal(&self) -> usize {
        self.values.len()
    }

    /// `y = W_hat x`, deterministic regardless of thread count.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = self.diag[i] * x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            *yi = acc;
        });
    }

    /// Off-diagonal entries of row `i` sorted by descending weight magnitude,
    /// ties by ascending column.
    pub fn row_neighbors(&self, i: usize) -> Vec<(usize, T)> {
        let (cols, vals) = self.row(i);
        let mut entries: Vec<(usize, T)> = cols
            .iter()
            .zip(vals)
            .map(|(&c, &v)| (c as usize, v))
            .collect();
        entries.sort_by(|a, b| {
            b.1.abs()
                .partial_cmp(&a.1.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        entries
    }

    /// Cluster row `i`'s weight magnitudes into three nested neighborhood
    /// rings (approximate 1-, 2-, and full-ball neighborhoods).
    pub fn ring_estimate(&self, i: usize) -> Result<RingEstimate> {
        let (cols, vals) = self.row(i);
        if cols.len() < 3 {
            return Err(Error::invalid(format!(
                "ring estimate needs at least 3 nonzeros in row {i}, found {}",
                cols.len()
            )));
        }
        let mags: Vec<T> = vals.iter().map(|v| v.abs()).collect();
        let mut distinct: Vec<T> = mags.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        distinct.dedup();
        let degenerate = distinct.len() < 3;

        let labels = kmeans_1d(&mags, 3, 100);
        // cluster 2 has the largest weights: the innermost ring
        let mut rings: [Vec<usize>; 3] = Default::default();
        for ring in 0..3 {
            let mut members: Vec<usize> = cols
                .iter()
                .zip(&labels)
                .filter_map(|(&c, &l)| (l >= 2 - ring).then_some(c as usize))
                .collect();
            members.sort_unstable();
            rings[ring] = members;
        }
        Ok(RingEstimate { rings, degenerate })
    }

    /// Component label per point over the nonzero pattern; labels are dense
    /// and ordered by each component's lowest point index.
    pub fn connected_components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0usize;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let j = self.col_idx[k] as usize;
                    if label[j] == usize::MAX {
                        label[j] = next;
                        stack.push(j);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.connected_components().iter().max().map_or(0, |&m| m + 1)
    }

    /// Upper-triangle off-diagonal entries `(i, j, w)` with `i < j`, ordered
    /// by row then column; one entry per symmetric pair.
    pub fn entries_upper(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .filter_map(move |(&c, &v)| ((c as usize) > i).then_some((i, c as usize, v)))
        })
    }

    /// Rebuild an operator from raw parts (used by the sparse-dump reader).
    /// `upper` must hold `i < j` entries sorted by `(i, j)`.
    pub fn from_parts(
        n: usize,
        upper: &[(usize, usize, T)],
        mass: Vec<T>,
        radius_r: T,
        bandwidth_eps: T,
    ) -> Result<Self> {
        if mass.len() != n {
            return Err(Error::invalid("mass diagonal length mismatch"));
        }
        let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); n];
        for &(i, j, w) in upper {
            if i >= j || j >= n {
                return Err(Error::invalid(format!("bad sparse entry ({i}, {j})")));
            }
            rows[i].push((j as u32, w));
            rows[j].push((i as u32, w));
        }
        Ok(Self::from_rows(rows, mass, radius_r, bandwidth_eps))
    }

    fn from_rows(
        mut rows: Vec<Vec<(u32, T)>>,
        mass: Vec<T>,
        radius_r: T,
        bandwidth_eps: T,
    ) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            // diagonal re-fix: negative row sum in ascending column order
            let mut sum = T::zero();
            for &(c, v) in row.iter() {
                col_idx.push(c);
                values.push(v);
                sum += v;
            }
            diag.push(-sum);
            row_ptr.push(col_idx.len());
        }
        SpclOperator {
            n,
            row_ptr,
            col_idx,
            values,
            diag,
            mass,
            radius_r,
            bandwidth_eps,
        }
    }
}

/// Assemble with the default bandwidth fraction.
pub fn assemble_spcl<T: Real>(cloud: &PointCloud<T>, r: T) -> Result<SpclOperator<T>> {
    assemble_spcl_with(cloud, r, r * cast::<T>(DEFAULT_BANDWIDTH_FRACTION))
}

/// Assemble the operator with an explicit Gaussian bandwidth.
///
/// Fails with complete per-point id lists when any neighborhood is too sparse
/// or degenerate; silent holes would corrupt the spectrum unpredictably.
pub fn assemble_spcl_with<T: Real>(
    cloud: &PointCloud<T>,
    r: T,
    eps: T,
) -> Result<SpclOperator<T>> {
    if !(r > T::zero()) || !(eps > T::zero()) {
        return Err(Error::invalid("radius and bandwidth must be positive"));
    }
    let n = cloud.len();
    let s_eps = cast::<T>(4.0)
        / (T::PI() * (cast::<T>(2.0) * eps) * (cast::<T>(2.0) * eps) * (cast::<T>(2.0) * eps)
            * (cast::<T>(2.0) * eps));
    let inv_4eps2 = T::one() / (cast::<T>(4.0) * eps * eps);
    let ninth = T::one() / cast::<T>(9.0);

    // Each row is computable from its own frame alone.
    let per_row: Vec<Result<(Vec<(u32, T)>, T)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let frame = build_local_frame(cloud, i, r)?;
            let tri = triangulate_frame(&frame)?;
            let a_own = tri.vertex_area[0];
            if !(a_own > T::zero()) {
                return Err(Error::DegenerateNeighborhood { point_ids: vec![i] });
            }
            let center = frame.projected[0];
            let mut row = Vec::with_capacity(frame.neighbor_indices.len() - 1);
            for k in 1..frame.neighbor_indices.len() {
                let a_j = tri.vertex_area[k];
                if !(a_j > T::zero()) {
                    continue;
                }
                let dx = frame.projected[k][0] - center[0];
                let dy = frame.projected[k][1] - center[1];
                let d2 = dx * dx + dy * dy;
                let w = -s_eps * a_own * a_j * ninth * (-d2 * inv_4eps2).exp();
                row.push((frame.neighbor_indices[k] as u32, w));
            }
            Ok((row, a_own / cast::<T>(3.0)))
        })
        .collect();

    let mut insufficient = Vec::new();
    let mut degenerate = Vec::new();
    let mut rows_raw: Vec<Vec<(u32, T)>> = Vec::with_capacity(n);
    let mut mass = Vec::with_capacity(n);
    for res in per_row {
        match res {
            Ok((row, m)) => {
                rows_raw.push(row);
                mass.push(m);
            }
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

    // Symmetrize: W_hat = (W + W^T) / 2 with absent entries treated as zero.
    // Each unordered pair is computed once so both storage halves share bits.
    let half = cast::<T>(0.5);
    let mut half_pairs: Vec<(u32, u32, T)> = Vec::new();
    for (i, row) in rows_raw.iter().enumerate() {
        for &(j, w) in row {
            let (a, b) = if (i as u32) < j {
                (i as u32, j)
            } else {
                (j, i as u32)
            };
            half_pairs.push((a, b, w * half));
        }
    }
    // group by pair; ordered merge keeps summation deterministic
    half_pairs.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(
        x.2.partial_cmp(&y.2).unwrap_or(std::cmp::Ordering::Equal),
    ));
    let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); n];
    let mut idx = 0;
    while idx < half_pairs.len() {
        let (a, b, mut w) = half_pairs[idx];
        idx += 1;
        while idx < half_pairs.len() && half_pairs[idx].0 == a && half_pairs[idx].1 == b {
            w += half_pairs[idx].2;
            idx += 1;
        }
        rows[a as usize].push((b, w));
        rows[b as usize].push((a, w));
    }

    Ok(SpclOperator::from_rows(
        rows,
        mass,
        r,
        eps,
    ))
}
