use super::problem::AffineProblem;
use crate::numerics::{dot, Mat};
use crate::{Error, Real, Result};

/// Relative residual below which a new Riesz representer is treated as
/// lying in the span of the previous ones.
const RIESZ_DROP: f64 = 1e-13;

/// Residual dual-norm data.
///
/// Every Riesz representer (of `f_q` and of `A_q v_n`) is expanded in an
/// `X`-orthonormal system; `columns[j]` holds the coefficients of
/// representer `j`. Column order: the `n_f` load terms, then for each basis
/// vector `n` its `n_a` operator terms. The residual norm is then the
/// Euclidean norm of a combination of columns.
#[derive(Clone, Debug, PartialEq)]
pub struct RieszTable<T> {
    pub n_a: usize,
    pub n_f: usize,
    pub columns: Vec<Vec<T>>,
}

impl<T: Real> RieszTable<T> {
    pub fn rank(&self) -> usize {
        self.columns.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `Δ = ‖Σ θ^f_q f_q − Σ_n u_n Σ_q θ^a_q A_q v_n‖_{X'}`.
    pub fn residual_norm(&self, theta_a: &[T], theta_f: &[T], u: &[T]) -> T {
        let mut y = vec![T::zero(); self.rank()];
        let mut add = |c: T, col: &[T]| {
            if c != T::zero() {
                for (o, &x) in y.iter_mut().zip(col) {
                    *o += c * x;
                }
            }
        };
        for (q, &t) in theta_f.iter().enumerate() {
            add(t, &self.columns[q]);
        }
        for (n, &un) in u.iter().enumerate() {
            for (q, &t) in theta_a.iter().enumerate() {
                add(-t * un, &self.columns[self.n_f + n * self.n_a + q]);
            }
        }
        y.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// `RᵀR`: the table of pairwise representer inner products.
    pub fn gram(&self) -> Mat<T> {
        let n = self.columns.len();
        let mut g = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (&self.columns[i], &self.columns[j]);
                let k = a.len().min(b.len());
                g[(i, j)] = dot(&a[..k], &b[..k]);
            }
        }
        g
    }
}

/// `X`-orthonormal reduced basis with projected affine terms.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSpace<T> {
    pub basis: Vec<Vec<T>>,
    /// `V^T A_q V`.
    pub a_n: Vec<Mat<T>>,
    /// `V^T f_q`.
    pub f_n: Vec<Vec<T>>,
    pub riesz: RieszTable<T>,
}

/// Solution of a reduced problem.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineSolution<T> {
    pub coefficients: Vec<T>,
    pub estimator: T,
}

impl<T: Real> ReducedSpace<T> {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Reduced matrix and load of the leading `n` basis functions.
    pub fn reduced_system(&self, theta_a: &[T], theta_f: &[T], n: usize) -> (Mat<T>, Vec<T>) {
        let mut a = Mat::zeros(n, n);
        for (t, m) in theta_a.iter().zip(&self.a_n) {
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] += *t * m[(i, j)];
                }
            }
        }
        let mut f = vec![T::zero(); n];
        for (t, v) in theta_f.iter().zip(&self.f_n) {
            for i in 0..n {
                f[i] += *t * v[i];
            }
        }
        (a, f)
    }

    /// Dense Galerkin solve on the leading `n` basis functions.
    pub fn solve_truncated(&self, theta_a: &[T], theta_f: &[T], n: usize) -> Result<OnlineSolution<T>> {
        let (a, f) = self.reduced_system(theta_a, theta_f, n);
        let coefficients = if n == 0 {
            Vec::new()
        } else {
            match a.cholesky() {
                Ok(c) => c.solve(&f),
                Err(_) => a
                    .lu()
                    .map_err(|_| Error::SingularSystem("reduced matrix is singular".into()))?
                    .solve(&f),
            }
        };
        let estimator = self.riesz.residual_norm(theta_a, theta_f, &coefficients);
        Ok(OnlineSolution {
            coefficients,
            estimator,
        })
    }

    pub fn solve(&self, theta_a: &[T], theta_f: &[T]) -> Result<OnlineSolution<T>> {
        self.solve_truncated(theta_a, theta_f, self.len())
    }

    /// `V u_N`.
    pub fn reconstruct(&self, coefficients: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.basis.first().map_or(0, Vec::len)];
        for (c, v) in coefficients.iter().zip(&self.basis) {
            for (o, &x) in out.iter_mut().zip(v) {
                *o += *c * x;
            }
        }
        out
    }
}

/// Incremental construction of a [`ReducedSpace`] (offline only: keeps the
/// `X`-orthonormal systems of the basis and of the Riesz representers).
pub struct SpaceBuilder<'a, T> {
    problem: &'a AffineProblem<T>,
    space: ReducedSpace<T>,
    x_basis: Vec<Vec<T>>,
    riesz_w: Vec<Vec<T>>,
    riesz_xw: Vec<Vec<T>>,
    /// `A_q v_n` for every basis vector.
    a_images: Vec<Vec<Vec<T>>>,
}

impl<'a, T: Real> SpaceBuilder<'a, T> {
    pub fn new(problem: &'a AffineProblem<T>) -> Self {
        let op = &problem.operator;
        let mut b = Self {
            problem,
            space: ReducedSpace {
                basis: Vec::new(),
                a_n: vec![Mat::zeros(0, 0); op.a_terms.len()],
                f_n: vec![Vec::new(); op.f_terms.len()],
                riesz: RieszTable {
                    n_a: op.a_terms.len(),
                    n_f: op.f_terms.len(),
                    columns: Vec::new(),
                },
            },
            x_basis: Vec::new(),
            riesz_w: Vec::new(),
            riesz_xw: Vec::new(),
            a_images: Vec::new(),
        };
        for f in &op.f_terms {
            b.add_representer(f);
        }
        b
    }

    pub fn space(&self) -> &ReducedSpace<T> {
        &self.space
    }

    pub fn into_space(self) -> ReducedSpace<T> {
        self.space
    }

    fn add_representer(&mut self, functional: &[T]) {
        let mut z = self.problem.metric_factor().solve(functional);
        let norm0 = dot(&z, functional).max(T::zero()).sqrt();
        let mut coef = vec![T::zero(); self.riesz_w.len()];
        for _ in 0..2 {
            for (j, (w, xw)) in self.riesz_w.iter().zip(&self.riesz_xw).enumerate() {
                let c = dot(xw, &z);
                coef[j] += c;
                for (zi, &wi) in z.iter_mut().zip(w) {
                    *zi -= c * wi;
                }
            }
        }
        let xz = self.problem.metric.matvec(&z);
        let rn = dot(&xz, &z).max(T::zero()).sqrt();
        if norm0 > T::zero() && rn.as_f64() > RIESZ_DROP * norm0.as_f64() {
            let inv = T::one() / rn;
            self.riesz_w.push(z.iter().map(|&v| v * inv).collect());
            self.riesz_xw.push(xz.iter().map(|&v| v * inv).collect());
            coef.push(rn);
        }
        self.space.riesz.columns.push(coef);
    }

    /// `X`-orthonormalizes `snapshot` against the basis (two passes) and
    /// appends it; returns `false` when it is numerically dependent.
    pub fn push(&mut self, snapshot: &[T]) -> bool {
        let x = &self.problem.metric;
        let norm0 = x.bilinear(snapshot, snapshot).max(T::zero()).sqrt();
        if norm0 == T::zero() {
            return false;
        }
        let mut v = snapshot.to_vec();
        for _ in 0..2 {
            for (b, xb) in self.space.basis.iter().zip(&self.x_basis) {
                let c = dot(xb, &v);
                for (vi, &bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let xv = x.matvec(&v);
        let n = dot(&xv, &v).max(T::zero()).sqrt();
        if n.as_f64() <= crate::numerics::gram_schmidt::DROP_TOLERANCE * norm0.as_f64() {
            return false;
        }
        let inv = T::one() / n;
        v.iter_mut().for_each(|e| *e *= inv);
        let xv: Vec<T> = xv.iter().map(|&e| e * inv).collect();
        self.extend_with(v, xv);
        true
    }

    fn extend_with(&mut self, v: Vec<T>, xv: Vec<T>) {
        let op = &self.problem.operator;
        let n = self.space.basis.len();
        let images: Vec<Vec<T>> = op.a_terms.iter().map(|a| a.matvec(&v)).collect();
        for (q, img) in images.iter().enumerate() {
            let old = &self.space.a_n[q];
            let mut m = Mat::zeros(n + 1, n + 1);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = old[(i, j)];
                }
            }
            for i in 0..n {
                let c = dot(&self.space.basis[i], img);
                let r = dot(&v, &self.a_images[i][q]);
                m[(i, n)] = c;
                m[(n, i)] = r;
            }
            m[(n, n)] = dot(&v, img);
            self.space.a_n[q] = m;
        }
        for (q, f) in op.f_terms.iter().enumerate() {
            self.space.f_n[q].push(dot(&v, f));
        }
        for img in &images {
            self.add_representer(img);
        }
        self.a_images.push(images);
        self.space.basis.push(v);
        self.x_basis.push(xv);
    }
}
