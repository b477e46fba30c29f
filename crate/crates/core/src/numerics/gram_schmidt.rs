//! Modified Gram–Schmidt in a metric, with one re-orthogonalization pass.

use super::dense::{dot, Mat};
use super::sparse::CsrMatrix;
use crate::Real;

/// Relative projection residual below which a column counts as dependent.
pub const DROP_TOLERANCE: f64 = 1e-10;

/// Symmetric positive-definite inner product `⟨a, b⟩ = aᵀ X b`.
pub trait InnerProduct<T: Real>: Sync {
    fn apply(&self, v: &[T]) -> Vec<T>;

    fn inner(&self, a: &[T], b: &[T]) -> T {
        dot(a, &self.apply(b))
    }

    fn norm(&self, v: &[T]) -> T {
        self.inner(v, v).max(T::zero()).sqrt()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Euclidean;

impl<T: Real> InnerProduct<T> for Euclidean {
    fn apply(&self, v: &[T]) -> Vec<T> {
        v.to_vec()
    }
}

impl<T: Real> InnerProduct<T> for CsrMatrix<T> {
    fn apply(&self, v: &[T]) -> Vec<T> {
        self.matvec(v)
    }
}

impl<T: Real> InnerProduct<T> for Mat<T> {
    fn apply(&self, v: &[T]) -> Vec<T> {
        self.matvec(v)
    }
}

/// Growing basis orthonormal in the metric `X`; caches `X v` for each member.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis<T> {
    vectors: Vec<Vec<T>>,
    metric_images: Vec<Vec<T>>,
    dropped: usize,
}

impl<T: Real> Default for OrthonormalBasis<T> {
    fn default() -> Self {
        Self {
            vectors: Vec::new(),
            metric_images: Vec::new(),
            dropped: 0,
        }
    }
}

impl<T: Real> OrthonormalBasis<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<T>] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<Vec<T>> {
        self.vectors
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Orthonormalizes `s` against the basis and appends it.
    ///
    /// Returns the index of the new vector, or `None` when `s` is numerically
    /// contained in the current span (the drop is counted).
    pub fn push<X: InnerProduct<T> + ?Sized>(&mut self, s: &[T], metric: &X) -> Option<usize> {
        let original = metric.norm(s);
        if original == T::zero() {
            self.dropped += 1;
            return None;
        }
        let mut w = s.to_vec();
        for _pass in 0..2 {
            for (v, xv) in self.vectors.iter().zip(&self.metric_images) {
                let r = dot(xv, &w);
                for (wi, &vi) in w.iter_mut().zip(v) {
                    *wi -= r * vi;
                }
            }
        }
        let xw = metric.apply(&w);
        let nrm = dot(&w, &xw).max(T::zero()).sqrt();
        if nrm < T::lit(DROP_TOLERANCE) * original {
            self.dropped += 1;
            log::warn!("gram-schmidt: dropped near-dependent column");
            return None;
        }
        let inv = T::one() / nrm;
        self.vectors.push(w.into_iter().map(|x| x * inv).collect());
        self.metric_images.push(xw.into_iter().map(|x| x * inv).collect());
        Some(self.vectors.len() - 1)
    }
}

/// Orthonormal basis of the span of `columns` in the metric `X`, with the
/// number of dropped near-dependent columns.
pub fn gram_schmidt<T: Real, X: InnerProduct<T> + ?Sized>(
    columns: &[Vec<T>],
    metric: &X,
) -> (Vec<Vec<T>>, usize) {
    let mut basis = OrthonormalBasis::new();
    for c in columns {
        basis.push(c, metric);
    }
    let dropped = basis.dropped();
    (basis.into_vectors(), dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gram<X: InnerProduct<f64>>(v: &[Vec<f64>], x: &X) -> Mat<f64> {
        let n = v.len();
        let mut g = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = x.inner(&v[i], &v[j]);
            }
        }
        g
    }

    fn identity_defect(g: &Mat<f64>) -> f64 {
        let mut e = 0.0f64;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let t = if i == j { 1.0 } else { 0.0 };
                e = e.max((g[(i, j)] - t).abs());
            }
        }
        e
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
        let data = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = Mat::from_row_major(n, n, data);
        let mut a = b.transpose().matmul(&b);
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        a
    }

    #[test]
    fn identical_columns_keep_one() {
        let c = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let (v, dropped) = gram_schmidt(&c, &Euclidean);
        assert_eq!(v.len(), 1);
        assert_eq!(dropped, 1);
    }

    #[test]
    fn euclidean_unit_vectors() {
        let c = vec![vec![1.0f64, 0.0], vec![1.0, 1.0]];
        let (v, _) = gram_schmidt(&c, &Euclidean);
        assert!((v[0][0] - 1.0).abs() < 1e-15 && v[0][1].abs() < 1e-15);
        assert!(v[1][0].abs() < 1e-15 && (v[1][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_metric_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_spd(50, &mut rng);
        let cols: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let (v, dropped) = gram_schmidt(&cols, &x);
        assert_eq!(dropped, 0);
        assert!(identity_defect(&gram(&v, &x)) < 1e-10);
    }

    #[test]
    fn reorthonormalizing_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = random_spd(30, &mut rng);
        let cols: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let (v, _) = gram_schmidt(&cols, &x);
        let (w, _) = gram_schmidt(&v, &x);
        for (a, b) in v.iter().zip(&w) {
            let sign = if dot(a, b) < 0.0 { -1.0 } else { 1.0 };
            for (p, q) in a.iter().zip(b) {
                assert!((p - sign * q).abs() < 1e-10);
            }
        }
    }
}
