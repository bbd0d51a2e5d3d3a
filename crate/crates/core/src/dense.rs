//! Small dense routines used as independent oracles: Gaussian elimination
//! and cyclic Jacobi eigenvalues for symmetric matrices.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .expect("nonempty");
        if a[p][k] == T::zero() {
            return Err(Error::SingularInterior { vertex: k });
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let v = a[k][j];
                a[i][j] = a[i][j] - f * v;
            }
            b[i] = b[i] - f * b[k];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s: T = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok(x)
}

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
pub fn symmetric_eigenvalues<T: Scalar>(mut a: Vec<Vec<T>>) -> Vec<T> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: T = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::two() * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}
