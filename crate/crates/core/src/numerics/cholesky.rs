//! Sparse symmetric positive-definite direct solver.
//!
//! Reverse Cuthill–McKee reordering followed by an envelope (variable-band)
//! Cholesky factorization. Fill is confined to the row envelope of the
//! reordered matrix.

use std::collections::VecDeque;

use super::sparse::CsrMatrix;
use crate::{Error, Real, Result};

#[derive(Clone, Debug)]
pub struct SparseCholesky<T> {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First stored column of each row of `L` (reordered numbering).
    first: Vec<usize>,
    /// Offset of `L[i, first[i]]` in `values`.
    offset: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseCholesky<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension("Cholesky of non-square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (old_i, &i) in inv.iter().enumerate() {
            for &old_j in a.row(old_i).0 {
                let j = inv[old_j];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for i in 0..n {
            offset.push(total);
            total += i - first[i] + 1;
        }
        offset.push(total);
        let mut values = vec![T::zero(); total];
        for (old_i, &i) in inv.iter().enumerate() {
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = inv[old_j];
                if j <= i {
                    values[offset[i] + j - first[i]] += v;
                }
            }
        }
        let scale = (0..n)
            .map(|i| values[offset[i] + i - first[i]].abs())
            .fold(T::zero(), T::max);
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = values[offset[i] + j - fi];
                let ri = &values[offset[i] + k0 - fi..offset[i] + j - fi];
                let rj = &values[offset[j] + k0 - fj..offset[j] + j - fj];
                for (&x, &y) in ri.iter().zip(rj) {
                    s -= x * y;
                }
                let djj = values[offset[j] + j - fj];
                values[offset[i] + j - fi] = s / djj;
            }
            let row = &values[offset[i]..offset[i] + i - fi];
            let d = values[offset[i] + i - fi] - row.iter().map(|&x| x * x).sum::<T>();
            if !(d > scale * T::epsilon() * T::lit(1e-2)) {
                return Err(Error::SingularSystem(format!(
                    "non-positive pivot {d:e} at row {} of {n}",
                    perm[i]
                )));
            }
            values[offset[i] + i - fi] = d.sqrt();
        }
        Ok(Self {
            n,
            perm,
            first,
            offset,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> T {
        self.values[self.offset[i] + j - self.first[i]]
    }

    fn forward(&self, y: &mut [T]) {
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i] + i - fi];
            let mut s = y[i];
            for (&l, &yk) in row.iter().zip(&y[fi..i]) {
                s -= l * yk;
            }
            y[i] = s / self.l(i, i);
        }
    }

    fn backward(&self, x: &mut [T]) {
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            x[i] /= self.l(i, i);
            let xi = x[i];
            let row = &self.values[self.offset[i]..self.offset[i] + i - fi];
            for (xk, &l) in x[fi..i].iter_mut().zip(row) {
                *xk -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "rhs length");
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        self.forward(&mut y);
        self.backward(&mut y);
        let mut x = vec![T::zero(); self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// `Lᵀ P v`, so that `vᵀ A v = ‖Lᵀ P v‖²`.
    pub fn apply_upper(&self, v: &[T]) -> Vec<T> {
        let pv: Vec<T> = self.perm.iter().map(|&p| v[p]).collect();
        let mut w = vec![T::zero(); self.n];
        for i in 0..self.n {
            let fi = self.first[i];
            for j in fi..=i {
                w[j] += self.l(i, j) * pv[i];
            }
        }
        w
    }

    /// Inverse of [`Self::apply_upper`]: returns `v` with `Lᵀ P v = w`.
    pub fn solve_upper(&self, w: &[T]) -> Vec<T> {
        let mut y = w.to_vec();
        self.backward(&mut y);
        let mut v = vec![T::zero(); self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            v[old] = y[new];
        }
        v
    }
}

/// Reverse Cuthill–McKee ordering; returns `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node");
        let root = pseudo_peripheral(a, start, &degree);
        let mut queue = VecDeque::new();
        visited[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_by_key(|&u| (degree[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels<T: Real>(a: &CsrMatrix<T>, root: usize) -> (Vec<usize>, usize) {
    let n = a.nrows();
    let mut level = vec![usize::MAX; n];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut last = root;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &u in a.row(v).0 {
            if level[u] == usize::MAX {
                level[u] = level[v] + 1;
                queue.push_back(u);
            }
        }
    }
    (level, last)
}

fn pseudo_peripheral<T: Real>(a: &CsrMatrix<T>, start: usize, degree: &[usize]) -> usize {
    let mut root = start;
    let (mut levels, _) = bfs_levels(a, root);
    let mut ecc = levels.iter().filter(|&&l| l != usize::MAX).max().copied().unwrap_or(0);
    for _ in 0..8 {
        let candidate = (0..levels.len())
            .filter(|&i| levels[i] == ecc)
            .min_by_key(|&i| (degree[i], i))
            .unwrap_or(root);
        let (l2, _) = bfs_levels(a, candidate);
        let e2 = l2.iter().filter(|&&l| l != usize::MAX).max().copied().unwrap_or(0);
        if e2 <= ecc {
            break;
        }
        root = candidate;
        levels = l2;
        ecc = e2;
    }
    root
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn identity_system() {
        let a = CsrMatrix::<f64>::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        let x = SparseCholesky::factor(&a).unwrap().solve(&b);
        assert_eq!(x, b);
    }

    #[test]
    fn one_dimensional_parabola() {
        // -u'' = 1 on (0,1), u(0)=u(1)=0, finite differences are exact for quadratics.
        let n = 49;
        let h = 1.0 / (n as f64 + 1.0);
        let a = laplacian_1d(n);
        let b = vec![h * h; n];
        let x = SparseCholesky::factor(&a).unwrap().solve(&b);
        for (i, &xi) in x.iter().enumerate() {
            let s = (i as f64 + 1.0) * h;
            assert!((xi - s * (1.0 - s) / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn two_dimensional_grid_residual() {
        let m = 12;
        let n = m * m;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                t.push((k, k, 4.0));
                if i > 0 {
                    t.push((k, k - m, -1.0));
                }
                if i + 1 < m {
                    t.push((k, k + m, -1.0));
                }
                if j > 0 {
                    t.push((k, k - 1, -1.0));
                }
                if j + 1 < m {
                    t.push((k, k + 1, -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b: Vec<f64> = (0..n).map(|k| (k as f64).sin()).collect();
        let chol = SparseCholesky::factor(&a).unwrap();
        let x = chol.solve(&b);
        let r = a.matvec(&x);
        let res: f64 = r.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-12 * nb);

        let w = chol.apply_upper(&b);
        let energy: f64 = w.iter().map(|v| v * v).sum();
        assert!((energy - a.bilinear(&b, &b)).abs() < 1e-10 * energy);
        let back = chol.solve_upper(&w);
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(SparseCholesky::factor(&a), Err(Error::SingularSystem(_))));
    }
}
