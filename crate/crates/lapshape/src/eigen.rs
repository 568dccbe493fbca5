//! Generalized symmetric eigensolver for the point-cloud Laplacian.
//!
//! The diagonal mass matrix makes the generalized problem `W x = lambda B x`
//! exactly reducible to a standard symmetric one via `B^{-1/2}`. The smallest
//! eigenpairs come from thick-restart Lanczos with full reorthogonalization
//! and deterministic seeding; the projected subspace problem is solved by a
//! dense Householder + QL eigensolver.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::{cast, to_f64, Real};
use crate::spcl::SpclOperator;

/// Ascending eigenvalues and B-orthonormal eigenvectors of the generalized
/// problem. Eigenvalues in `[-1e-8 * lambda_max, 0)` are clamped to zero.
#[derive(Clone, Debug)]
pub struct EigenSystem<T: Real> {
    eigenvalues: Vec<T>,
    /// Column-major `n x k`.
    vectors: Vec<T>,
    n: usize,
}

impl<T: Real> EigenSystem<T> {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, i: usize) -> T {
        self.eigenvalues[i]
    }

    /// Eigenvector `i` as a length-`n` slice.
    pub fn eigenvector(&self, i: usize) -> &[T] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions<T: Real> {
    pub seed: u64,
    /// Residual tolerance relative to the largest computed eigenvalue.
    pub tol: T,
    pub max_restarts: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            seed: 0x1a95,
            tol: (T::epsilon() * cast::<T>(100.0)).max(cast::<T>(1e-9)),
            max_restarts: 0, // 0: derive from k
        }
    }
}

/// Smallest-`k` eigenpairs with default options.
pub fn solve_eigs<T: Real>(op: &SpclOperator<T>, k: usize) -> Result<EigenSystem<T>> {
    solve_eigs_with(op, k, &SolveOptions::default())
}

pub fn solve_eigs_with<T: Real>(
    op: &SpclOperator<T>,
    k: usize,
    opts: &SolveOptions<T>,
) -> Result<EigenSystem<T>> {
    let n = op.len();
    if k < 1 || k >= n {
        return Err(Error::invalid(format!(
            "eigenpair count must satisfy 1 <= k <= n - 1 (k = {k}, n = {n})"
        )));
    }
    let d_inv_sqrt: Vec<T> = (0..n).map(|i| T::one() / op.mass(i).sqrt()).collect();
    let max_restarts = if opts.max_restarts == 0 {
        50 * k.max(4)
    } else {
        opts.max_restarts
    };

    let matvec = |x: &[T], y: &mut [T], scratch: &mut [T]| {
        for i in 0..n {
            scratch[i] = d_inv_sqrt[i] * x[i];
        }
        op.matvec(scratch, y);
        for i in 0..n {
            y[i] *= d_inv_sqrt[i];
        }
    };

    let (thetas, ritz) = lanczos_smallest(n, k, matvec, opts, max_restarts)?;

    // back to generalized coordinates: phi = B^{-1/2} x, already B-orthonormal
    let mut vectors = vec![T::zero(); n * k];
    for c in 0..k {
        let col = &mut vectors[c * n..(c + 1) * n];
        for i in 0..n {
            col[i] = d_inv_sqrt[i] * ritz[c * n + i];
        }
        canonicalize_sign(col);
    }

    let lambda_max = thetas
        .iter()
        .fold(T::zero(), |acc, &t| if t > acc { t } else { acc });
    let clamp_floor = -cast::<T>(1e-8) * lambda_max;
    let eigenvalues = thetas
        .iter()
        .map(|&t| if t >= clamp_floor && t < T::zero() { T::zero() } else { t })
        .collect();

    Ok(EigenSystem {
        eigenvalues,
        vectors,
        n,
    })
}

/// Flip a vector's sign so its largest-magnitude component (lowest index on
/// ties) is positive.
fn canonicalize_sign<T: Real>(v: &mut [T]) {
    let mut arg = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[arg].abs() {
            arg = i;
        }
    }
    if v[arg] < T::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Thick-restart Lanczos for the `k` smallest eigenpairs of a symmetric
/// operator given through `matvec(x, y, scratch)`.
fn lanczos_smallest<T: Real, F>(
    n: usize,
    k: usize,
    matvec: F,
    opts: &SolveOptions<T>,
    max_restarts: usize,
) -> Result<(Vec<T>, Vec<T>)>
where
    F: Fn(&[T], &mut [T], &mut [T]),
{
    let ncv = n.min((2 * k + 1).max(k + 40));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // column-major basis, one extra slot for the residual direction
    let mut basis = vec![T::zero(); n * ncv];
    let mut h = vec![T::zero(); ncv * ncv];
    let mut next = vec![T::zero(); n]; // v_{ncv} candidate
    let mut scratch = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];

    random_unit(&mut rng, &mut basis[0..n]);
    let mut locked = 0usize; // thick part size; 0 on the first cycle
    let mut beta_prev = T::zero();

    for _restart in 0..max_restarts {
        // extend the Lanczos factorization from column `locked` to `ncv`
        for j in locked..ncv {
            let vj = basis[j * n..(j + 1) * n].to_vec();
            matvec(&vj, &mut w, &mut scratch);
            let alpha = dot_slice(&vj, &w);
            h[j * ncv + j] = alpha;
            axpy(&mut w, -alpha, &vj);
            if j == locked && locked > 0 {
                // arrowhead couplings to the locked Ritz vectors
                for i in 0..locked {
                    let c = h[i * ncv + j];
                    if c != T::zero() {
                        let vi = &basis[i * n..(i + 1) * n];
                        for (wx, &vx) in w.iter_mut().zip(vi) {
                            *wx -= c * vx;
                        }
                    }
                }
            } else if j > 0 && beta_prev != T::zero() {
                let vprev = &basis[(j - 1) * n..j * n].to_vec();
                axpy(&mut w, -beta_prev, vprev);
            }
            // full reorthogonalization, two passes
            for _pass in 0..2 {
                for i in 0..=j {
                    let vi = &basis[i * n..(i + 1) * n];
                    let c = dot_slice(vi, &w);
                    for (wx, &vx) in w.iter_mut().zip(vi) {
                        *wx -= c * vx;
                    }
                }
            }
            let beta = norm_slice(&w);
            let floor = T::epsilon().sqrt() * T::epsilon().sqrt(); // ~eps
            if beta > floor {
                for x in w.iter_mut() {
                    *x /= beta;
                }
            } else {
                // invariant subspace found; continue in a fresh direction
                random_unit(&mut rng, &mut w);
                orthogonalize_against(&mut w, &basis, j + 1, n);
                let nw = norm_slice(&w);
                for x in w.iter_mut() {
                    *x /= nw;
                }
            }
            let beta_entry = if beta > floor { beta } else { T::zero() };
            if j + 1 < ncv {
                h[j * ncv + (j + 1)] = beta_entry;
                h[(j + 1) * ncv + j] = beta_entry;
                basis[(j + 1) * n..(j + 2) * n].copy_from_slice(&w);
            } else {
                next.copy_from_slice(&w);
            }
            beta_prev = beta_entry;
        }
        let beta_last = beta_prev;

        // dense solve of the projected problem
        let (thetas, s) = sym_eigen_dense(&h, ncv)?;

        // residual estimates |beta * s[last, i]|
        let scale = thetas.iter().fold(T::min_positive_value(), |acc, &t| {
            if t.abs() > acc {
                t.abs()
            } else {
                acc
            }
        });
        let converged = (0..k).all(|i| {
            (beta_last * s[i * ncv + (ncv - 1)]).abs() <= opts.tol * scale
        });

        if converged || ncv == n {
            let ritz = form_ritz(&basis, &s, n, ncv, k);
            return Ok((thetas[0..k].to_vec(), ritz));
        }

        // thick restart: keep the smallest `locked` Ritz pairs plus the
        // residual direction, then continue the factorization
        locked = (k + 20).min(ncv.saturating_sub(10)).max(k.min(ncv - 2));
        let kept = form_ritz(&basis, &s, n, ncv, locked);
        basis[0..n * locked].copy_from_slice(&kept);
        basis[locked * n..(locked + 1) * n].copy_from_slice(&next);
        h.iter_mut().for_each(|x| *x = T::zero());
        for i in 0..locked {
            h[i * ncv + i] = thetas[i];
            let c = beta_last * s[i * ncv + (ncv - 1)];
            h[i * ncv + locked] = c;
            h[locked * ncv + i] = c;
        }
        beta_prev = T::zero();
    }

    // out of restarts: report residuals of the best current estimates
    let (thetas, s) = sym_eigen_dense(&h, ncv)?;
    let residuals: Vec<f64> = (0..k)
        .map(|i| to_f64((beta_prev * s[i * ncv + (ncv - 1)]).abs() / thetas[k - 1].abs()))
        .collect();
    let _ = thetas;
    Err(Error::SolverFailure { residuals })
}

fn random_unit<T: Real>(rng: &mut ChaCha8Rng, v: &mut [T]) {
    for x in v.iter_mut() {
        *x = cast::<T>(rng.random_range(-1.0..1.0f64));
    }
    let nv = norm_slice(v);
    for x in v.iter_mut() {
        *x /= nv;
    }
}

fn orthogonalize_against<T: Real>(w: &mut [T], basis: &[T], cols: usize, n: usize) {
    for _pass in 0..2 {
        for i in 0..cols {
            let vi = &basis[i * n..(i + 1) * n];
            let c = dot_slice(vi, w);
            for (wx, &vx) in w.iter_mut().zip(vi) {
                *wx -= c * vx;
            }
        }
    }
}

/// `ritz[:, c] = basis * s[:, c]` for the first `count` columns.
fn form_ritz<T: Real>(basis: &[T], s: &[T], n: usize, ncv: usize, count: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * count];
    out.par_chunks_mut(n).enumerate().for_each(|(c, col)| {
        for j in 0..ncv {
            let coeff = s[c * ncv + j];
            if coeff != T::zero() {
                let vj = &basis[j * n..(j + 1) * n];
                for (o, &v) in col.iter_mut().zip(vj) {
                    *o += coeff * v;
                }
            }
        }
    });
    out
}

#[inline]
fn dot_slice<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
fn norm_slice<T: Real>(a: &[T]) -> T {
    dot_slice(a, a).sqrt()
}

#[inline]
fn axpy<T: Real>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Eigen-decomposition of a dense symmetric matrix (row-major, `n x n`):
/// Householder reduction to tridiagonal form followed by QL with implicit
/// shifts. Returns ascending eigenvalues and column-major eigenvectors.
pub fn sym_eigen_dense<T: Real>(a: &[T], n: usize) -> Result<(Vec<T>, Vec<T>)> {
    assert_eq!(a.len(), n * n);
    let mut z = a.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut z, n, &mut d, &mut e);
    tqli(&mut d, &mut e, n, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        d[i].partial_cmp(&d[j])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values: Vec<T> = order.iter().map(|&i| d[i]).collect();
    // z holds eigenvectors as columns in row-major storage; emit column-major
    let mut vectors = vec![T::zero(); n * n];
    for (c, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[c * n + r] = z[r * n + src];
        }
    }
    Ok((values, vectors))
}

/// Householder reduction of a real symmetric matrix to tridiagonal form;
/// `a` is replaced by the accumulated orthogonal transform.
fn tred2<T: Real>(a: &mut [T], n: usize, d: &mut [T], e: &mut [T]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let mut scale = T::zero();
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == T::zero() {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = T::zero();
                for j in 0..=l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g_acc = T::zero();
                    for k in 0..=j {
                        g_acc += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g_acc += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let delta = f * e[k] + g * a[i * n + k];
                        a[j * n + k] -= delta;
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = T::zero();
    e[0] = T::zero();
    for i in 0..n {
        if d[i] != T::zero() {
            for j in 0..i {
                let mut g = T::zero();
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = T::one();
        for j in 0..i {
            a[j * n + i] = T::zero();
            a[i * n + j] = T::zero();
        }
    }
}

#[inline]
fn pythag<T: Real>(a: T, b: T) -> T {
    let (absa, absb) = (a.abs(), b.abs());
    if absa > absb {
        let r = absb / absa;
        absa * (T::one() + r * r).sqrt()
    } else if absb == T::zero() {
        T::zero()
    } else {
        let r = absa / absb;
        absb * (T::one() + r * r).sqrt()
    }
}

/// QL with implicit shifts on a symmetric tridiagonal matrix, accumulating
/// the rotations into `z`.
fn tqli<T: Real>(d: &mut [T], e: &mut [T], n: usize, z: &mut [T]) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::SolverFailure {
                    residuals: vec![to_f64(e[l])],
                });
            }
            let mut g = (d[l + 1] - d[l]) / (cast::<T>(2.0) * e[l]);
            let mut r = pythag(g, T::one());
            let sign_r = if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (T::one(), T::one());
            let mut p = T::zero();
            let mut i = m;
            while i > l {
                let im1 = i - 1;
                let mut f = s * e[im1];
                let b = c * e[im1];
                r = pythag(f, g);
                e[i] = r;
                if r == T::zero() {
                    d[i] -= p;
                    e[m] = T::zero();
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i] - p;
                r = (d[im1] - g) * s + cast::<T>(2.0) * c * b;
                p = s * r;
                d[i] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i];
                    z[k * n + i] = s * z[k * n + im1] + c * f;
                    z[k * n + im1] = c * z[k * n + im1] - s * f;
                }
                i -= 1;
            }
            if r == T::zero() && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;
    use crate::linalg::V3;
    use crate::spcl::assemble_spcl;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_eigen_matches_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &n in &[2usize, 3, 5, 17, 60] {
            let mut a = vec![0.0f64; n * n];
            for i in 0..n {
                for j in i..n {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    a[i * n + j] = x;
                    a[j * n + i] = x;
                }
            }
            let (vals, vecs) = sym_eigen_dense(&a, n).unwrap();
            let na = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i * n + j]);
            let mut expected: Vec<f64> =
                na.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for i in 0..n {
                assert!(
                    (vals[i] - expected[i]).abs() <= 1e-9 * (1.0 + expected[i].abs()),
                    "n={n} i={i}: {} vs {}",
                    vals[i],
                    expected[i]
                );
                // residual check
                let v = &vecs[i * n..(i + 1) * n];
                let mut resid: f64 = 0.0;
                for r in 0..n {
                    let mut acc = 0.0;
                    for c in 0..n {
                        acc += a[r * n + c] * v[c];
                    }
                    resid += (acc - vals[i] * v[r]).powi(2);
                }
                assert!(resid.sqrt() < 1e-8, "n={n} i={i} residual {}", resid.sqrt());
            }
        }
    }

    fn wavy_cloud(n: usize, seed: u64) -> PointCloud<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<V3<f64>> = (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(0.0..3.0);
                let y: f64 = rng.random_range(0.0..3.0);
                [x, y, 0.25 * (x * 1.1).sin() * (y * 1.4).cos()]
            })
            .collect();
        PointCloud::from_points(pts).unwrap()
    }

    /// Dense generalized solve through nalgebra: an implementation-independent
    /// oracle for the iterative path.
    pub fn dense_generalized_oracle(op: &crate::spcl::SpclOperator<f64>) -> Vec<f64> {
        let n = op.len();
        let mut c = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            let di = 1.0 / op.mass(i).sqrt();
            c[(i, i)] = op.diag(i) * di * di;
            let (cols, vals) = op.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                c[(i, j as usize)] = v * di / op.mass(j as usize).sqrt();
            }
        }
        let mut vals: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    #[test]
    fn lanczos_matches_dense_oracle_on_small_clouds() {
        for seed in [1u64, 2, 3] {
            let cloud = wavy_cloud(220, seed);
            let op = assemble_spcl(&cloud, cloud.spacing() * 6.0).unwrap();
            let dense = dense_generalized_oracle(&op);
            let k = 40;
            let eigs = solve_eigs(&op, k).unwrap();
            for i in 0..k {
                let want = dense[i].max(0.0);
                let got = eigs.eigenvalue(i);
                assert!(
                    (got - want).abs() <= 1e-6 * dense[k - 1].abs().max(1e-12),
                    "seed {seed} i={i}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn constant_mode_and_b_orthonormality() {
        let cloud = wavy_cloud(300, 9);
        let op = assemble_spcl(&cloud, cloud.spacing() * 6.0).unwrap();
        let eigs = solve_eigs(&op, 12).unwrap();
        assert_eq!(eigs.eigenvalue(0), 0.0, "lambda_0 must clamp to zero");
        // eigenvalues ascending and nonnegative
        for w in eigs.eigenvalues().windows(2) {
            assert!(w[0] <= w[1]);
            assert!(w[0] >= 0.0);
        }
        // phi_0 constant up to small relative variation
        let phi0 = eigs.eigenvector(0);
        let mean: f64 = phi0.iter().sum::<f64>() / phi0.len() as f64;
        for &x in phi0 {
            assert!((x - mean).abs() <= 1e-6 * mean.abs(), "{x} vs {mean}");
        }
        // B-orthonormality
        for i in 0..eigs.k() {
            for j in i..eigs.k() {
                let mut acc = 0.0;
                for (r, (&a, &b)) in eigs.eigenvector(i).iter().zip(eigs.eigenvector(j)).enumerate()
                {
                    acc += a * op.mass(r) * b;
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((acc - want).abs() < 1e-8, "({i},{j}): {acc}");
            }
        }
    }

    #[test]
    fn k_out_of_range_rejected() {
        let cloud = wavy_cloud(50, 4);
        let op = assemble_spcl(&cloud, cloud.spacing() * 6.0).unwrap();
        assert!(solve_eigs(&op, 0).is_err());
        assert!(solve_eigs(&op, op.len()).is_err());
    }

    #[test]
    fn spectrum_invariant_under_rigid_motion_and_permutation() {
        let cloud = wavy_cloud(250, 13);
        let r = cloud.spacing() * 6.0;
        let op0 = assemble_spcl(&cloud, r).unwrap();
        let e0 = solve_eigs(&op0, 15).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut perm: Vec<usize> = (0..cloud.len()).collect();
        for i in (1..perm.len()).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let ang: f64 = 0.9;
        let (s, c) = ang.sin_cos();
        let moved: Vec<V3<f64>> = perm
            .iter()
            .map(|&i| {
                let p = cloud.point(i);
                let q = [c * p[0] - s * p[2], p[1] + 0.4, s * p[0] + c * p[2]];
                [q[0] + 1.0, q[1], q[2] - 2.0]
            })
            .collect();
        let cloud1 = PointCloud::from_points(moved).unwrap();
        let op1 = assemble_spcl(&cloud1, r).unwrap();
        let e1 = solve_eigs(&op1, 15).unwrap();
        let scale = e0.eigenvalue(14);
        for i in 0..15 {
            assert!(
                (e0.eigenvalue(i) - e1.eigenvalue(i)).abs() <= 1e-6 * scale,
                "i={i}: {} vs {}",
                e0.eigenvalue(i),
                e1.eigenvalue(i)
            );
        }
    }
}
