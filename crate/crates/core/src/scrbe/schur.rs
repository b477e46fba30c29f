use crate::numerics::Mat;
use crate::{Error, Real, Result};

/// Numbering of the skeleton unknowns `û_{p,r}`: port-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeIndex {
    offsets: Vec<usize>,
}

impl ModeIndex {
    pub fn new(sizes: &[usize]) -> Self {
        let mut offsets = vec![0];
        for &s in sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Self { offsets }
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, port: usize, mode: usize) -> usize {
        self.offsets[port] + mode
    }

    pub fn range(&self, port: usize) -> std::ops::Range<usize> {
        self.offsets[port]..self.offsets[port + 1]
    }
}

/// Condensed contribution of one patch: rows/columns indexed by the
/// patch's skeleton unknowns `modes`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchContribution<T> {
    pub modes: Vec<usize>,
    pub matrix: Mat<T>,
    pub rhs: Vec<T>,
}

/// `Σ_k a_k(Φ_i, Φ_j)` on the patch fields `phi` and `Σ_k r_k(Φ_i)`.
///
/// `apply` is the patch operator; `residual` is the patch load minus the
/// operator applied to the source bubble.
pub fn patch_contribution<T: Real>(
    modes: Vec<usize>,
    phi: &[Vec<T>],
    apply: impl Fn(&[T]) -> Vec<T>,
    residual: &[T],
) -> PatchContribution<T> {
    let n = phi.len();
    let images: Vec<Vec<T>> = phi.iter().map(|v| apply(v)).collect();
    let mut matrix = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = crate::numerics::dot(&phi[i], &images[j]);
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    let rhs = phi.iter().map(|v| crate::numerics::dot(v, residual)).collect();
    PatchContribution { modes, matrix, rhs }
}

/// Skeleton system `S û = g`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchurSystem<T> {
    pub matrix: Mat<T>,
    pub rhs: Vec<T>,
}

impl<T: Real> SchurSystem<T> {
    /// Deterministic sum of the patch contributions in patch order.
    pub fn assemble(n: usize, parts: &[PatchContribution<T>]) -> Self {
        let mut matrix = Mat::zeros(n, n);
        let mut rhs = vec![T::zero(); n];
        for p in parts {
            for (a, &i) in p.modes.iter().enumerate() {
                rhs[i] += p.rhs[a];
                for (b, &j) in p.modes.iter().enumerate() {
                    matrix[(i, j)] += p.matrix[(a, b)];
                }
            }
        }
        Self { matrix, rhs }
    }

    pub fn solve(&self) -> Result<Vec<T>> {
        if self.rhs.is_empty() {
            return Ok(Vec::new());
        }
        self.matrix
            .cholesky()
            .map_err(|_| Error::SingularSystem("skeleton matrix is not positive definite".into()))
            .map(|c| c.solve(&self.rhs))
    }
}
