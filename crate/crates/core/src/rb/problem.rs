use crate::eim::AffineOperator;
use crate::numerics::{sparse_solve, CsrMatrix, SparseCholesky};
use crate::{Real, Result};

/// Affine operator together with the metric `X` of the solution space.
#[derive(Clone)]
pub struct AffineProblem<T> {
    pub operator: AffineOperator<T>,
    pub metric: CsrMatrix<T>,
    factor: SparseCholesky<T>,
}

impl<T: Real> AffineProblem<T> {
    pub fn new(operator: AffineOperator<T>, metric: CsrMatrix<T>) -> Result<Self> {
        let factor = SparseCholesky::factor(&metric)?;
        Ok(Self {
            operator,
            metric,
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn metric_factor(&self) -> &SparseCholesky<T> {
        &self.factor
    }

    pub fn theta(&self, mu: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        self.operator.coefficients.theta(mu)
    }

    /// Truth solve of the affine system for given coefficients.
    pub fn solve_theta(&self, theta_a: &[T], theta_f: &[T]) -> Result<Vec<T>> {
        let refs: Vec<&CsrMatrix<T>> = self.operator.a_terms.iter().collect();
        let a = CsrMatrix::linear_combination(theta_a, &refs)?;
        let mut f = vec![T::zero(); self.dim()];
        for (t, v) in theta_f.iter().zip(&self.operator.f_terms) {
            for (o, &x) in f.iter_mut().zip(v) {
                *o += *t * x;
            }
        }
        sparse_solve(&a, &f)
    }

    pub fn solve(&self, mu: &[T]) -> Result<Vec<T>> {
        let (ta, tf) = self.theta(mu)?;
        self.solve_theta(&ta, &tf)
    }

    /// `‖r‖_{X'}` for `r = f − A u`, computed directly.
    pub fn dual_residual(&self, theta_a: &[T], theta_f: &[T], u: &[T]) -> Result<T> {
        let refs: Vec<&CsrMatrix<T>> = self.operator.a_terms.iter().collect();
        let a = CsrMatrix::linear_combination(theta_a, &refs)?;
        let au = a.matvec(u);
        let mut r = vec![T::zero(); self.dim()];
        for (t, v) in theta_f.iter().zip(&self.operator.f_terms) {
            for (o, &x) in r.iter_mut().zip(v) {
                *o += *t * x;
            }
        }
        for (o, &x) in r.iter_mut().zip(&au) {
            *o -= x;
        }
        let z = self.factor.solve(&r);
        Ok(crate::numerics::dot(&r, &z).max(T::zero()).sqrt())
    }
}
