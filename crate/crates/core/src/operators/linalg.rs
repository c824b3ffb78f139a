//! Dense LU solve and Hermitian eigenvalues.

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Lower and upper bandwidth of a row-major `n × n` matrix.
fn bandwidths<T: Real>(a: &[Cplx<T>], n: usize) -> (usize, usize) {
    let zero = Cplx::new(T::zero(), T::zero());
    let (mut kl, mut ku) = (0, 0);
    for i in 0..n {
        for j in 0..n {
            if a[i * n + j] != zero {
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
    }
    (kl, ku)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major and consumed. Elimination is confined to the measured
/// band of `A`: pivots come from the lower band and fill-in from partial
/// pivoting stays within `kl + ku` above the diagonal.
pub fn solve_dense<T: Real>(mut a: Vec<Cplx<T>>, n: usize, mut b: Vec<Cplx<T>>) -> Result<Vec<Cplx<T>>> {
    assert_eq!(a.len(), n * n, "matrix storage");
    assert_eq!(b.len(), n, "right-hand side length");
    let zero = Cplx::new(T::zero(), T::zero());
    let (kl, ku) = bandwidths(&a, n);
    let scale = a.iter().fold(T::zero(), |m, x| m.max(x.norm()));
    let tiny = scale * T::epsilon() * T::from_count(n.max(1));

    let mut pivots = vec![0usize; n];
    let mut pivot_min = T::infinity();
    let mut pivot_max = T::zero();
    let mut pivot_row: Vec<(usize, Cplx<T>)> = Vec::with_capacity(kl + ku + 1);

    for k in 0..n {
        let row_end = n.min(k + kl + 1);
        let col_end = n.min(k + kl + ku + 1);

        let mut p = k;
        let mut best = a[k * n + k].norm();
        for i in k + 1..row_end {
            let v = a[i * n + k].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > tiny) {
            return Err(Error::Singular {
                column: k,
                pivot: best.as_f64(),
                condition: f64::INFINITY,
            });
        }
        pivot_min = pivot_min.min(best);
        pivot_max = pivot_max.max(best);
        pivots[k] = p;
        if p != k {
            for j in k..col_end {
                a.swap(k * n + j, p * n + j);
            }
        }

        let inv = Cplx::new(T::one(), T::zero()) / a[k * n + k];
        pivot_row.clear();
        for j in k + 1..col_end {
            let v = a[k * n + j];
            if v != zero {
                pivot_row.push((j, v));
            }
        }
        for i in k + 1..row_end {
            let f = a[i * n + k];
            if f == zero {
                continue;
            }
            let f = f * inv;
            a[i * n + k] = f;
            let row = &mut a[i * n..(i + 1) * n];
            for &(j, v) in &pivot_row {
                row[j] -= f * v;
            }
        }
    }

    // forward substitution with row interchanges applied in order
    for k in 0..n {
        let p = pivots[k];
        if p != k {
            b.swap(k, p);
        }
        let bk = b[k];
        if bk == zero {
            continue;
        }
        for i in k + 1..n.min(k + kl + 1) {
            let f = a[i * n + k];
            if f != zero {
                b[i] -= f * bk;
            }
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n.min(k + kl + ku + 1) {
            let v = a[k * n + j];
            if v != zero {
                acc -= v * b[j];
            }
        }
        b[k] = acc / a[k * n + k];
    }

    let condition = (pivot_max / pivot_min).as_f64();
    if !condition.is_finite() || condition > 1.0 / T::epsilon().as_f64() {
        return Err(Error::Singular {
            column: n,
            pivot: pivot_min.as_f64(),
            condition,
        });
    }
    Ok(b)
}

/// Eigenvalues of the Hermitian part of a row-major complex matrix, ascending.
///
/// Uses cyclic Jacobi on the real symmetric embedding `[[A, −B], [B, A]]`
/// of `H = A + iB`, whose spectrum is that of `H` with every eigenvalue
/// doubled.
pub fn hermitian_eigenvalues<T: Real>(h: &[Cplx<T>], n: usize) -> Vec<T> {
    let half = T::lit(0.5);
    let m = 2 * n;
    let mut s = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            let hij = (h[i * n + j] + h[j * n + i].conj()) * half;
            s[i * m + j] = hij.re;
            s[(i + n) * m + (j + n)] = hij.re;
            s[i * m + (j + n)] = -hij.im;
            s[(i + n) * m + j] = hij.im;
        }
    }
    let total: T = s.iter().map(|x| *x * *x).sum();
    let threshold = T::epsilon() * T::epsilon() * total;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..m {
            for q in p + 1..m {
                off += s[p * m + q] * s[p * m + q];
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = s[p * m + q];
                if apq == T::zero() {
                    continue;
                }
                let app = s[p * m + p];
                let aqq = s[q * m + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..m {
                    let akp = s[k * m + p];
                    let akq = s[k * m + q];
                    s[k * m + p] = cs * akp - sn * akq;
                    s[k * m + q] = sn * akp + cs * akq;
                }
                for k in 0..m {
                    let apk = s[p * m + k];
                    let aqk = s[q * m + k];
                    s[p * m + k] = cs * apk - sn * aqk;
                    s[q * m + k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..m).map(|i| s[i * m + i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eig.chunks(2).map(|pair| (pair[0] + pair[1]) * half).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_small_system_requiring_pivoting() {
        // [[0, 1], [2, 3]] x = [1, 8] -> x = [2.5, 1]
        let a = vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        let x = solve_dense(a, 2, vec![c(1.0, 0.0), c(8.0, 0.0)]).unwrap();
        assert!((x[0] - c(2.5, 0.0)).norm() < 1e-14);
        assert!((x[1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn banded_solve_matches_residual() {
        let n = 40;
        let mut a = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = c(0.1 * i as f64, -1.0);
            if i + 7 < n {
                a[i * n + i + 7] = c(2.0, 0.3);
            }
            if i >= 3 {
                a[i * n + i - 3] = c(-1.5, 0.5 * i as f64);
            }
        }
        let b: Vec<_> = (0..n).map(|i| c(i as f64, 1.0)).collect();
        let x = solve_dense(a.clone(), n, b.clone()).unwrap();
        for i in 0..n {
            let r: Complex64 = (0..n).map(|j| a[i * n + j] * x[j]).sum::<Complex64>() - b[i];
            assert!(r.norm() < 1e-10, "row {i} residual {}", r.norm());
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)];
        assert!(matches!(
            solve_dense(a, 2, vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn eigenvalues_of_pauli_y_and_diagonal() {
        let y = vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)];
        let e = hermitian_eigenvalues(&y, 2);
        assert!((e[0] + 1.0).abs() < 1e-13 && (e[1] - 1.0).abs() < 1e-13);
        let d = vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)];
        let e = hermitian_eigenvalues(&d, 2);
        assert_eq!(e, vec![-2.0, 3.0]);
    }
}
