//! Sparse symmetric matrices and an LDLᵀ factorization for SPD blocks.
//!
//! The factorization equilibrates symmetrically (unit diagonal), orders
//! pivots by minimum degree on the elimination graph and eliminates
//! right-looking. On trees the minimum-degree order peels leaves first and
//! produces no fill.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm2, Scalar};

/// Symmetric matrix with both triangles stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric<T> {
    rows: Vec<BTreeMap<usize, T>>,
}

impl<T: Scalar> SparseSymmetric<T> {
    pub fn zeros(n: usize) -> Self {
        Self { rows: vec![BTreeMap::new(); n] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` to entry `(i, j)` and, when `i ≠ j`, to `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let e = self.rows[i].entry(j).or_insert_with(T::zero);
        *e = *e + v;
        if i != j {
            let e = self.rows[j].entry(i).or_insert_with(T::zero);
            *e = *e + v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.rows[i].get(&j).copied().unwrap_or(T::zero())
    }

    /// Nonzero pattern of row `i` as `(column, value)` in increasing column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.rows[i].iter().map(|(&j, &v)| (j, v))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        self.rows.iter().map(|r| r.iter().map(|(&j, &v)| v * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        let mut d = vec![vec![T::zero(); n]; n];
        for (i, r) in self.rows.iter().enumerate() {
            for (&j, &v) in r {
                d[i][j] = v;
            }
        }
        d
    }

    /// Principal submatrix on `idx`, renumbered `0..idx.len()`.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.dim()];
        for (k, &i) in idx.iter().enumerate() {
            local[i] = k;
        }
        let rows = idx
            .iter()
            .map(|&i| {
                self.rows[i]
                    .iter()
                    .filter(|(&j, _)| local[j] != usize::MAX)
                    .map(|(&j, &v)| (local[j], v))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn max_asymmetry(&self) -> T {
        let mut m = T::zero();
        for (i, r) in self.rows.iter().enumerate() {
            for (&j, &v) in r {
                m = m.max((v - self.get(j, i)).abs());
            }
        }
        m
    }
}

/// `A = S⁻¹ L D Lᵀ S⁻¹` with `S` the Jacobi scaling, `L` unit lower
/// triangular in elimination order.
#[derive(Debug, Clone)]
pub struct LdlFactor<T> {
    matrix: SparseSymmetric<T>,
    scale: Vec<T>,
    /// Pivot sequence.
    order: Vec<usize>,
    /// `d[p]` for pivot `p` (indexed by matrix row, not step).
    pivots: Vec<T>,
    /// Column of `L` below each pivot step: `(row, l_{row,p})`.
    columns: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> LdlFactor<T> {
    /// Factors an SPD matrix. A nonpositive pivot yields
    /// [`Error::SingularInterior`] naming the local row index.
    pub fn new(matrix: SparseSymmetric<T>) -> Result<Self> {
        let n = matrix.dim();
        let mut scale = Vec::with_capacity(n);
        for i in 0..n {
            let d = matrix.get(i, i);
            if !(d > T::zero()) {
                return Err(Error::SingularInterior { vertex: i });
            }
            scale.push(T::one() / d.sqrt());
        }
        let mut work: Vec<BTreeMap<usize, T>> = (0..n)
            .map(|i| matrix.row(i).map(|(j, v)| (j, v * scale[i] * scale[j])).collect())
            .collect();

        let mut eliminated = vec![false; n];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
            (0..n).map(|i| Reverse((work[i].len(), i))).collect();
        let mut order = Vec::with_capacity(n);
        let mut pivots = vec![T::zero(); n];
        let mut columns = Vec::with_capacity(n);
        let tiny = T::epsilon() * T::lit(16.0);

        while let Some(Reverse((deg, p))) = heap.pop() {
            if eliminated[p] || deg != work[p].len() {
                continue;
            }
            eliminated[p] = true;
            let row = std::mem::take(&mut work[p]);
            let d = row.get(&p).copied().unwrap_or(T::zero());
            if !(d > tiny) {
                return Err(Error::SingularInterior { vertex: p });
            }
            let nbrs: Vec<(usize, T)> = row.into_iter().filter(|&(j, _)| j != p).collect();
            for &(i, _) in &nbrs {
                work[i].remove(&p);
            }
            for (a, &(i, vi)) in nbrs.iter().enumerate() {
                for &(j, vj) in &nbrs[a..] {
                    let upd = vi * vj / d;
                    let e = work[i].entry(j).or_insert_with(T::zero);
                    *e = *e - upd;
                    if i != j {
                        let e = work[j].entry(i).or_insert_with(T::zero);
                        *e = *e - upd;
                    }
                }
            }
            for &(i, _) in &nbrs {
                heap.push(Reverse((work[i].len(), i)));
            }
            pivots[p] = d;
            order.push(p);
            columns.push(nbrs.into_iter().map(|(i, v)| (i, v / d)).collect());
        }
        Ok(Self { matrix, scale, order, pivots, columns })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SparseSymmetric<T> {
        &self.matrix
    }

    /// Pivots of the equilibrated matrix; all positive means positive definite.
    pub fn pivots(&self) -> &[T] {
        &self.pivots
    }

    /// Entries of `L` below the diagonal.
    pub fn fill(&self) -> usize {
        self.columns.iter().map(|c| c.len()).sum()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut y: Vec<T> = b.iter().zip(&self.scale).map(|(&v, &s)| v * s).collect();
        for (&p, col) in self.order.iter().zip(&self.columns) {
            let yp = y[p];
            for &(i, l) in col {
                y[i] = y[i] - l * yp;
            }
        }
        for (v, &d) in y.iter_mut().zip(&self.pivots) {
            *v = *v / d;
        }
        for (&p, col) in self.order.iter().zip(&self.columns).rev() {
            let mut acc = y[p];
            for &(i, l) in col {
                acc = acc - l * y[i];
            }
            y[p] = acc;
        }
        y.iter().zip(&self.scale).map(|(&v, &s)| v * s).collect()
    }

    /// Condition estimate of the equilibrated matrix: a Gershgorin bound on
    /// the largest eigenvalue over an inverse-iteration estimate of the smallest.
    pub fn condition_estimate(&self) -> T {
        let n = self.dim();
        let mut gersh = T::zero();
        for i in 0..n {
            let r: T = self.matrix.row(i).map(|(j, v)| (v * self.scale[i] * self.scale[j]).abs()).sum();
            gersh = gersh.max(r);
        }
        let scaled_apply = |x: &[T]| -> Vec<T> {
            let sx: Vec<T> = x.iter().zip(&self.scale).map(|(&v, &s)| v * s).collect();
            self.matrix.mul_vec(&sx).iter().zip(&self.scale).map(|(&v, &s)| v * s).collect()
        };
        let scaled_solve = |x: &[T]| -> Vec<T> {
            let ux: Vec<T> = x.iter().zip(&self.scale).map(|(&v, &s)| v / s).collect();
            self.solve(&ux).iter().zip(&self.scale).map(|(&v, &s)| v / s).collect()
        };
        let est = inverse_iteration(n, scaled_apply, scaled_solve, 50, T::lit(1e-6));
        gersh / est.value
    }

    /// Smallest eigenvalue of `A` by inverse iteration with Rayleigh quotients.
    pub fn smallest_eigenvalue(&self, max_iter: usize, tol: T) -> EigenEstimate<T> {
        inverse_iteration(self.dim(), |x| self.matrix.mul_vec(x), |x| self.solve(x), max_iter, tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate<T> {
    pub value: T,
    pub iterations: usize,
    /// `‖A x − λ x‖` for the final unit vector.
    pub residual: T,
}

fn inverse_iteration<T: Scalar>(
    n: usize,
    apply: impl Fn(&[T]) -> Vec<T>,
    solve: impl Fn(&[T]) -> Vec<T>,
    max_iter: usize,
    tol: T,
) -> EigenEstimate<T> {
    // Deterministic start with components of both signs.
    let mut x: Vec<T> = (0..n).map(|i| T::one() + T::lit(0.37) * T::from_count(i % 7)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v = *v / nx);
    let mut lambda = dot(&x, &apply(&x));
    let mut iterations = 0;
    for it in 1..=max_iter.max(1) {
        iterations = it;
        let mut y = solve(&x);
        let ny = norm2(&y);
        y.iter_mut().for_each(|v| *v = *v / ny);
        x = y;
        let next = dot(&x, &apply(&x));
        let done = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    let ax = apply(&x);
    let r: Vec<T> = ax.iter().zip(&x).map(|(&a, &v)| a - lambda * v).collect();
    EigenEstimate { value: lambda, iterations, residual: norm2(&r) }
}
