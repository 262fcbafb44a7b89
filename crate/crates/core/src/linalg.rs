//! Small dense linear algebra on row-major `n×n` slices.
//!
//! Matrices here are at most a few dozen entries wide (m ≤ 5, 3×3 tensors),
//! so plain loops beat pulling in a full linear-algebra crate.

use crate::real::Real;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of a row-major matrix.
pub fn sym_eigen<T: Real>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    // symmetrise against round-off in the caller
    for i in 0..n {
        for j in i + 1..n {
            let s = (m[i * n + j] + m[j * n + i]) * T::lit(0.5);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let mut v = identity::<T>(n);
    let scale = m.iter().fold(T::zero(), |s, &x| s.max(x.fabs()));
    if scale == T::zero() {
        return (vec![T::zero(); n], v);
    }
    let tiny = scale * T::eps() * T::lit(1e-3);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off + m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= tiny {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.fabs() <= tiny * T::lit(1e-3) {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.fabs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let vals = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![T::zero(); n * n];
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + newc] = v[r * n + oldc];
        }
    }
    (vals, vecs)
}

pub fn sym_eigenvalues<T: Real>(a: &[T], n: usize) -> Vec<T> {
    sym_eigen(a, n).0
}

pub fn identity<T: Real>(n: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    v
}

/// Cholesky factor `L` (row-major, lower) of an SPD matrix, or `None`.
pub fn cholesky<T: Real>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

pub fn cholesky_solve<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - l[i * n + k] * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] = y[i] - l[k * n + i] * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    y
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn lu_solve<T: Real>(a: &[T], n: usize, b: &[T]) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].fabs().partial_cmp(&m[j * n + col].fabs()).unwrap())
            .unwrap();
        if m[piv * n + col] == T::zero() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for r in col + 1..n {
            let f = m[r * n + col] / m[col * n + col];
            if f != T::zero() {
                for k in col..n {
                    m[r * n + k] = m[r * n + k] - f * m[col * n + k];
                }
                x[r] = x[r] - f * x[col];
            }
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s = s - m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

/// Inverse of an SPD matrix.
pub fn spd_inverse<T: Real>(a: &[T], n: usize) -> Option<Vec<T>> {
    let l = cholesky(a, n)?;
    let mut inv = vec![T::zero(); n * n];
    for c in 0..n {
        let mut e = vec![T::zero(); n];
        e[c] = T::one();
        let col = cholesky_solve(&l, n, &e);
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    Some(inv)
}

pub fn mat_vec<T: Real>(a: &[T], n: usize, x: &[T]) -> Vec<T> {
    (0..n)
        .map(|i| (0..x.len()).fold(T::zero(), |s, k| s + a[i * x.len() + k] * x[k]))
        .collect()
}

pub fn mat_mul<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] = c[i * n + j] + aik * b[k * n + j];
            }
        }
    }
    c
}

/// Quadratic form `xᵀ A x`.
pub fn quad_form<T: Real>(a: &[T], n: usize, x: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            s = s + x[i] * a[i * n + j] * x[j];
        }
    }
    s
}
