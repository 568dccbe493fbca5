//! Minimal 3-vector helpers and a symmetric 3x3 eigensolver.
//!
//! Points are plain `[T; 3]` throughout the crate; these free functions keep
//! the geometry code readable without pulling a matrix library into the
//! generic core.

use crate::real::Real;

pub type V3<T> = [T; 3];

#[inline]
pub fn sub<T: Real>(a: V3<T>, b: V3<T>) -> V3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add<T: Real>(a: V3<T>, b: V3<T>) -> V3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale<T: Real>(a: V3<T>, s: T) -> V3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot<T: Real>(a: V3<T>, b: V3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: V3<T>, b: V3<T>) -> V3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm_sq<T: Real>(a: V3<T>) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Real>(a: V3<T>) -> T {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist<T: Real>(a: V3<T>, b: V3<T>) -> T {
    norm(sub(a, b))
}

#[inline]
pub fn normalize<T: Real>(a: V3<T>) -> V3<T> {
    let n = norm(a);
    scale(a, T::one() / n)
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order with matching orthonormal
/// eigenvectors. Each eigenvector's sign is canonicalized so its
/// largest-magnitude component (lowest index on ties) is positive, which keeps
/// downstream output bit-reproducible.
pub fn sym_eigen_3x3<T: Real>(m: [[T; 3]; 3]) -> ([T; 3], [V3<T>; 3]) {
    let mut a = m;
    // v accumulates the rotations; columns are eigenvectors
    let mut v = [
        [T::one(), T::zero(), T::zero()],
        [T::zero(), T::one(), T::zero()],
        [T::zero(), T::zero(), T::one()],
    ];
    for _sweep in 0..64 {
        let off = (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt();
        let diag = (a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2]).sqrt();
        if off <= T::epsilon() * (diag + T::min_positive_value()) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (cast2::<T>() * apq);
            // stable tangent of the rotation angle
            let t = {
                let s = theta.abs() + (theta * theta + T::one()).sqrt();
                let t = T::one() / s;
                if theta < T::zero() {
                    -t
                } else {
                    t
                }
            };
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            let tau = s / (T::one() + c);

            let app = a[p][p];
            let aqq = a[q][q];
            a[p][p] = app - t * apq;
            a[q][q] = aqq + t * apq;
            a[p][q] = T::zero();
            a[q][p] = T::zero();
            for r in 0..3 {
                if r != p && r != q {
                    let arp = a[r][p];
                    let arq = a[r][q];
                    a[r][p] = arp - s * (arq + tau * arp);
                    a[p][r] = a[r][p];
                    a[r][q] = arq + s * (arp - tau * arq);
                    a[q][r] = a[r][q];
                }
            }
            for r in 0..3 {
                let vrp = v[r][p];
                let vrq = v[r][q];
                v[r][p] = vrp - s * (vrq + tau * vrp);
                v[r][q] = vrq + s * (vrp - tau * vrq);
            }
        }
    }

    let mut order = [0usize, 1, 2];
    // descending eigenvalue, index tie-break
    order.sort_by(|&i, &j| {
        a[j][j]
            .partial_cmp(&a[i][i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let mut values = [T::zero(); 3];
    let mut vectors = [[T::zero(); 3]; 3];
    for (slot, &idx) in order.iter().enumerate() {
        values[slot] = a[idx][idx];
        let mut col = [v[0][idx], v[1][idx], v[2][idx]];
        let mut arg = 0usize;
        for r in 1..3 {
            if col[r].abs() > col[arg].abs() {
                arg = r;
            }
        }
        if col[arg] < T::zero() {
            col = [-col[0], -col[1], -col[2]];
        }
        vectors[slot] = col;
    }
    (values, vectors)
}

#[inline]
fn cast2<T: Real>() -> T {
    T::one() + T::one()
}
