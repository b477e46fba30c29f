use crate::numerics::{svd, Cholesky, Mat, SparseCholesky};
use crate::{Error, Real, Result};

/// Factored metric `X = Cᵀ C`, used to move between `X`-geometry and
/// Euclidean geometry.
pub trait MetricFactor<T: Real>: Sync {
    fn dim(&self) -> usize;
    /// `C v`, with `‖C v‖₂ = ‖v‖_X`.
    fn apply_upper(&self, v: &[T]) -> Vec<T>;
    /// `C⁻¹ w`.
    fn solve_upper(&self, w: &[T]) -> Vec<T>;
}

impl<T: Real> MetricFactor<T> for SparseCholesky<T> {
    fn dim(&self) -> usize {
        SparseCholesky::dim(self)
    }

    fn apply_upper(&self, v: &[T]) -> Vec<T> {
        SparseCholesky::apply_upper(self, v)
    }

    fn solve_upper(&self, w: &[T]) -> Vec<T> {
        SparseCholesky::solve_upper(self, w)
    }
}

impl<T: Real> MetricFactor<T> for Cholesky<T> {
    fn dim(&self) -> usize {
        self.l().rows()
    }

    fn apply_upper(&self, v: &[T]) -> Vec<T> {
        self.apply_lt(v)
    }

    fn solve_upper(&self, w: &[T]) -> Vec<T> {
        self.solve_lt(w)
    }
}

/// Identity metric of a given dimension.
#[derive(Clone, Copy, Debug)]
pub struct EuclideanFactor(pub usize);

impl<T: Real> MetricFactor<T> for EuclideanFactor {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply_upper(&self, v: &[T]) -> Vec<T> {
        v.to_vec()
    }

    fn solve_upper(&self, w: &[T]) -> Vec<T> {
        w.to_vec()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PodResult<T> {
    /// `X`-orthonormal modes.
    pub basis: Vec<Vec<T>>,
    /// All singular values, non-increasing.
    pub sigma: Vec<T>,
}

impl<T: Real> PodResult<T> {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

/// Smallest `N` with `1 − Σ_{i≤N} σ_i² / Σ σ_i² ≤ tol` (at most the number
/// of nonzero singular values).
pub fn pod_size<T: Real>(sigma: &[T], tol: f64) -> usize {
    let total: f64 = sigma.iter().map(|s| s.as_f64().powi(2)).sum();
    let rank = sigma.iter().filter(|s| s.as_f64() > 0.0).count();
    let mut acc = 0.0;
    for (n, s) in sigma.iter().enumerate() {
        acc += s.as_f64().powi(2);
        if 1.0 - acc / total <= tol {
            return (n + 1).min(rank.max(1));
        }
    }
    rank.max(1)
}

/// POD of the snapshot columns in the metric of `factor`.
pub fn pod<T: Real, F: MetricFactor<T> + ?Sized>(snapshots: &[Vec<T>], factor: &F, tol: f64) -> Result<PodResult<T>> {
    if snapshots.is_empty() {
        return Err(Error::Degenerate("POD needs at least one snapshot".into()));
    }
    let weighted: Vec<Vec<T>> = snapshots.iter().map(|s| factor.apply_upper(s)).collect();
    let s = Mat::from_columns(&weighted);
    let dec = svd(&s);
    if dec.sigma.first().map_or(true, |&s| s == T::zero()) {
        return Err(Error::Degenerate("all POD snapshots vanish".into()));
    }
    let n = pod_size(&dec.sigma, tol);
    let basis = (0..n).map(|i| factor.solve_upper(&dec.u.column(i))).collect();
    Ok(PodResult { basis, sigma: dec.sigma })
}
