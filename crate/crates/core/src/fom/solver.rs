use super::assembly::FomAssembler;
use super::source::Source;
use crate::geometry::MultipatchModel;
use crate::numerics::{norm2, sparse_solve, CsrMatrix};
use crate::{Real, Result};

/// Discrete system on the free DOFs (Dirichlet DOFs eliminated).
#[derive(Clone, Debug, PartialEq)]
pub struct FomSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
}

impl<T: Real> FomSystem<T> {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn solve(&self) -> Result<Vec<T>> {
        sparse_solve(&self.matrix, &self.rhs)
    }

    /// `‖A u − f‖ / ‖f‖`.
    pub fn relative_residual(&self, u: &[T]) -> T {
        let r: Vec<T> = self.matrix.matvec(u).iter().zip(&self.rhs).map(|(&a, &b)| a - b).collect();
        let nf = norm2(&self.rhs);
        if nf == T::zero() {
            norm2(&r)
        } else {
            norm2(&r) / nf
        }
    }
}

/// Solution coefficients on all glued DOFs; Dirichlet entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FomSolution<T> {
    pub mu: Vec<T>,
    pub coefficients: Vec<T>,
}

impl<T: Real> FomSolution<T> {
    pub fn from_free(model: &MultipatchModel<T>, mu: &[T], free: &[T]) -> Self {
        Self {
            mu: mu.to_vec(),
            coefficients: model.dofs().expand(free),
        }
    }

    pub fn free(&self, model: &MultipatchModel<T>) -> Vec<T> {
        model.dofs().restrict(&self.coefficients)
    }
}

/// Full-order solver: model, cached assembly data and source term.
#[derive(Clone, Debug)]
pub struct Fom<T> {
    model: MultipatchModel<T>,
    assembler: FomAssembler<T>,
    source: Source<T>,
}

impl<T: Real> Fom<T> {
    pub fn new(model: MultipatchModel<T>, source: Source<T>) -> Self {
        let assembler = FomAssembler::new(&model);
        Self {
            model,
            assembler,
            source,
        }
    }

    pub fn model(&self) -> &MultipatchModel<T> {
        &self.model
    }

    pub fn assembler(&self) -> &FomAssembler<T> {
        &self.assembler
    }

    pub fn source(&self) -> &Source<T> {
        &self.source
    }

    pub fn n_free(&self) -> usize {
        self.model.n_free()
    }

    /// Parameter at which the metric is assembled (box midpoint).
    pub fn reference_mu(&self) -> Vec<T> {
        self.model.params().midpoint()
    }

    pub fn assemble(&self, mu: &[T]) -> Result<FomSystem<T>> {
        let (matrix, rhs) = self.assembler.assemble(&self.model, mu, &self.source)?;
        Ok(FomSystem { matrix, rhs })
    }

    pub fn solve(&self, mu: &[T]) -> Result<FomSolution<T>> {
        let sys = self.assemble(mu)?;
        let u = sys.solve()?;
        Ok(FomSolution::from_free(&self.model, mu, &u))
    }

    /// `X_h`: the stiffness at the reference parameter.
    pub fn metric(&self) -> Result<CsrMatrix<T>> {
        Ok(self.assemble(&self.reference_mu())?.matrix)
    }
}
