use super::layout::PatchLayout;
use crate::fom::PatchAssembler;
use crate::numerics::{CsrMatrix, SparseCholesky};
use crate::splines::MAX_DIM;
use crate::{Real, Result};

/// `∫_Ω̂ ∇̂v · ∇̂u` on the patch slots.
pub fn reference_laplacian<T: Real>(pa: &PatchAssembler<T>) -> CsrMatrix<T> {
    let mut id = [[T::zero(); MAX_DIM]; MAX_DIM];
    for (i, row) in id.iter_mut().enumerate().take(pa.dim()) {
        row[i] = T::one();
    }
    pa.stiffness_with(|_, _| id)
}

/// Discrete harmonic lifting of port traces into a patch.
#[derive(Clone, Debug)]
pub struct HarmonicExtender<T> {
    layout: PatchLayout,
    laplacian: CsrMatrix<T>,
    factor: Option<SparseCholesky<T>>,
}

impl<T: Real> HarmonicExtender<T> {
    pub fn new(pa: &PatchAssembler<T>, layout: PatchLayout) -> Result<Self> {
        let laplacian = reference_laplacian(pa);
        let factor = if layout.bubble.is_empty() {
            None
        } else {
            Some(SparseCholesky::factor(&laplacian.submatrix(&layout.bubble, &layout.bubble))?)
        };
        Ok(Self {
            layout,
            laplacian,
            factor,
        })
    }

    pub fn layout(&self) -> &PatchLayout {
        &self.layout
    }

    pub fn laplacian(&self) -> &CsrMatrix<T> {
        &self.laplacian
    }

    /// Slot vector with trace `chi` on local port `j`, zero on the other
    /// ports, and reference-harmonic bubble values.
    pub fn extend(&self, j: usize, chi: &[T]) -> Vec<T> {
        let mut psi = vec![T::zero(); self.layout.n_slots];
        for (&s, &v) in self.layout.ports[j].slots.iter().zip(chi) {
            psi[s] = v;
        }
        if let Some(f) = &self.factor {
            let r = self.laplacian.matvec(&psi);
            let rhs: Vec<T> = self.layout.bubble.iter().map(|&s| -r[s]).collect();
            for (&s, v) in self.layout.bubble.iter().zip(f.solve(&rhs)) {
                psi[s] = v;
            }
        }
        psi
    }
}
