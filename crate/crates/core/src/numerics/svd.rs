//! Thin singular value decomposition by one-sided Jacobi rotations.

use super::dense::{dot, Mat};
use crate::Real;

/// Thin SVD `S = U Σ Zᵀ` with `k = min(m, n)` singular triplets.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    /// `m × k`, orthonormal columns.
    pub u: Mat<T>,
    /// Non-increasing singular values, length `k`.
    pub sigma: Vec<T>,
    /// `n × k`, orthonormal columns.
    pub z: Mat<T>,
}

impl<T: Real> Svd<T> {
    /// `U Σ Zᵀ`.
    pub fn reconstruct(&self) -> Mat<T> {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, &s) in self.sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.z.transpose())
    }
}

pub fn svd<T: Real>(s: &Mat<T>) -> Svd<T> {
    if s.rows() >= s.cols() {
        let cols = s.columns();
        let (u, sigma, z) = jacobi_columns(cols, s.rows());
        Svd { u, sigma, z }
    } else {
        let cols = s.transpose().columns();
        let (z, sigma, u) = jacobi_columns(cols, s.cols());
        Svd { u, sigma, z }
    }
}

/// Hestenes one-sided Jacobi on the columns of an `m × n` matrix with `m >= n`.
fn jacobi_columns<T: Real>(mut a: Vec<Vec<T>>, m: usize) -> (Mat<T>, Vec<T>, Mat<T>) {
    let n = a.len();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            e
        })
        .collect();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, T)> = a.iter().enumerate().map(|(j, c)| (j, dot(c, c).sqrt())).collect();
    order.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(std::cmp::Ordering::Equal).then(x.0.cmp(&y.0)));

    let sigma_max = order.first().map_or(T::zero(), |o| o.1);
    let zero_cut = sigma_max * eps * T::from_usize_lossy(m.max(n));
    let mut u_cols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut z_cols = Vec::with_capacity(n);
    for &(j, s) in &order {
        if s > zero_cut && s > T::zero() {
            u_cols.push(a[j].iter().map(|&x| x / s).collect());
            sigma.push(s);
        } else {
            u_cols.push(Vec::new());
            sigma.push(T::zero());
        }
        z_cols.push(v[j].clone());
    }
    complete_orthonormal(&mut u_cols, m);
    (Mat::from_columns(&u_cols), sigma, Mat::from_columns(&z_cols))
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills empty columns with unit vectors orthogonalized against the others.
fn complete_orthonormal<T: Real>(cols: &mut [Vec<T>], m: usize) {
    let mut candidate = 0usize;
    for j in 0..cols.len() {
        if !cols[j].is_empty() {
            continue;
        }
        loop {
            assert!(candidate < m, "cannot complete orthonormal basis");
            let mut e = vec![T::zero(); m];
            e[candidate] = T::one();
            candidate += 1;
            for _ in 0..2 {
                for other in cols.iter().filter(|c| !c.is_empty()) {
                    let r = dot(other, &e);
                    for (x, &o) in e.iter_mut().zip(other) {
                        *x -= r * o;
                    }
                }
            }
            let nrm = dot(&e, &e).sqrt();
            if nrm > T::lit(1e-3) {
                cols[j] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}
