//! Shared numerical kernels.

pub mod cholesky;
pub mod dense;
pub mod gram_schmidt;
pub mod lhs;
pub mod quadrature;
pub mod sparse;
pub mod svd;

pub use cholesky::SparseCholesky;
pub use dense::{axpy, dot, norm2, solve_unit_lower, Cholesky, Lu, Mat};
pub use gram_schmidt::{gram_schmidt, Euclidean, InnerProduct, OrthonormalBasis};
pub use lhs::lhs_sample;
pub use quadrature::{gauss_rule, QuadratureRule};
pub use sparse::CsrMatrix;
pub use svd::{svd, Svd};

use crate::{Error, Real, Result};

/// Direct solve of a sparse SPD system with a relative-residual check.
pub fn sparse_solve<T: Real>(a: &CsrMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let x = SparseCholesky::factor(a)?.solve(b);
    let r = a.matvec(&x);
    let res = r.iter().zip(b).map(|(&p, &q)| (p - q) * (p - q)).sum::<T>().sqrt();
    let nb = norm2(b);
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(1e3));
    if nb > T::zero() && res > tol * nb {
        return Err(Error::SingularSystem(format!(
            "relative residual {:e} after direct solve",
            (res / nb).as_f64()
        )));
    }
    Ok(x)
}
