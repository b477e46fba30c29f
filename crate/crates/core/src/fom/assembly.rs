use rayon::prelude::*;

use super::quadrature::{PatchQuadrature, QpGeometry};
use super::source::Source;
use crate::geometry::MultipatchModel;
use crate::numerics::CsrMatrix;
use crate::splines::{Point, MAX_DIM};
use crate::{Real, Result};

pub type SymTensor<T> = [[T; MAX_DIM]; MAX_DIM];

const NONE: usize = usize::MAX;

/// Assembly data of one patch: quadrature cache plus the sparsity pattern
/// on the patch's free local DOFs ("slots", numbered in local index order).
#[derive(Clone, Debug)]
pub struct PatchAssembler<T> {
    quad: PatchQuadrature<T>,
    slots: Vec<usize>,
    slot_of: Vec<usize>,
    pattern: CsrMatrix<T>,
    /// Per element, the value position of each local `(a, b)` pair.
    positions: Vec<Vec<usize>>,
}

impl<T: Real> PatchAssembler<T> {
    /// `free[i]` tells whether local DOF `i` is an unknown.
    pub fn new(quad: PatchQuadrature<T>, free: &[bool]) -> Self {
        let slots: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
        let mut slot_of = vec![NONE; free.len()];
        for (s, &i) in slots.iter().enumerate() {
            slot_of[i] = s;
        }
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
        for el in quad.elements() {
            for &a in &el.dofs {
                if slot_of[a] == NONE {
                    continue;
                }
                for &b in &el.dofs {
                    if slot_of[b] != NONE {
                        rows[slot_of[a]].push(slot_of[b]);
                    }
                }
            }
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = CsrMatrix::from_pattern(slots.len(), slots.len(), &rows);
        let positions = quad
            .elements()
            .iter()
            .map(|el| {
                let mut pos = Vec::with_capacity(el.dofs.len() * el.dofs.len());
                for &a in &el.dofs {
                    for &b in &el.dofs {
                        let (sa, sb) = (slot_of[a], slot_of[b]);
                        pos.push(if sa == NONE || sb == NONE {
                            NONE
                        } else {
                            pattern.position(sa, sb).expect("in pattern")
                        });
                    }
                }
                pos
            })
            .collect();
        Self {
            quad,
            slots,
            slot_of,
            pattern,
            positions,
        }
    }

    pub fn quadrature(&self) -> &PatchQuadrature<T> {
        &self.quad
    }

    pub fn dim(&self) -> usize {
        self.quad.dim()
    }

    /// Local DOF index of each slot.
    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    /// Slot of a local DOF, `None` for Dirichlet DOFs.
    pub fn slot(&self, local: usize) -> Option<usize> {
        let s = self.slot_of[local];
        (s != NONE).then_some(s)
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn pattern(&self) -> &CsrMatrix<T> {
        &self.pattern
    }

    /// `∫ ∇v̂ · C ∇û` with a per-quadrature-point tensor `C(e, q)` already
    /// including every geometric factor except the quadrature weight.
    pub fn stiffness_with<F>(&self, coef: F) -> CsrMatrix<T>
    where
        F: Fn(usize, usize) -> SymTensor<T>,
    {
        let dim = self.dim();
        let mut m = self.pattern.clone();
        let values = m.values_mut();
        let mut cg: Vec<Point<T>> = Vec::new();
        for (e, el) in self.quad.elements().iter().enumerate() {
            let n = el.dofs.len();
            let pos = &self.positions[e];
            let mut local = vec![T::zero(); n * n];
            for (q, qp) in el.points.iter().enumerate() {
                let c = coef(e, q);
                cg.clear();
                cg.extend(qp.grads.iter().map(|g| {
                    let mut v = [T::zero(); MAX_DIM];
                    for r in 0..dim {
                        for s in 0..dim {
                            v[r] += c[r][s] * g[s];
                        }
                        v[r] *= qp.weight;
                    }
                    v
                }));
                for a in 0..n {
                    let ga = &qp.grads[a];
                    let row = &mut local[a * n..(a + 1) * n];
                    for (b, v) in cg.iter().enumerate() {
                        let mut s = T::zero();
                        for r in 0..dim {
                            s += ga[r] * v[r];
                        }
                        row[b] += s;
                    }
                }
            }
            for (k, &p) in pos.iter().enumerate() {
                if p != NONE {
                    values[p] += local[k];
                }
            }
        }
        m
    }

    /// `∫ g v̂` over the slots, with `g(e, q)` including geometric factors.
    pub fn load_with<F>(&self, coef: F) -> Vec<T>
    where
        F: Fn(usize, usize) -> T,
    {
        let mut out = vec![T::zero(); self.n_slots()];
        for (e, el) in self.quad.elements().iter().enumerate() {
            for (q, qp) in el.points.iter().enumerate() {
                let g = coef(e, q) * qp.weight;
                for (a, &i) in el.dofs.iter().enumerate() {
                    let s = self.slot_of[i];
                    if s != NONE {
                        out[s] += g * qp.values[a];
                    }
                }
            }
        }
        out
    }

    pub fn geometry(&self, points: &[Point<T>], mu: &[T]) -> Result<Vec<Vec<QpGeometry<T>>>> {
        self.quad.geometry(points, mu)
    }

    /// Local stiffness and load for an instantiated net.
    pub fn assemble(&self, points: &[Point<T>], source: &Source<T>, mu: &[T]) -> Result<(CsrMatrix<T>, Vec<T>)> {
        let dim = self.dim();
        let geo = self.geometry(points, mu)?;
        let a = self.stiffness_with(|e, q| geo[e][q].jac.pullback_tensor(dim));
        let f = self.load_with(|e, q| source.eval(&geo[e][q].x, dim) * geo[e][q].jac.det.abs());
        Ok((a, f))
    }
}

/// Global assembly: patch assemblers plus the scatter into the glued free
/// numbering. All global matrices share one sparsity pattern.
#[derive(Clone, Debug)]
pub struct FomAssembler<T> {
    patches: Vec<PatchAssembler<T>>,
    /// Global free index of each patch slot.
    slot_to_free: Vec<Vec<usize>>,
    pattern: CsrMatrix<T>,
    /// Global value position of each patch-local value.
    scatter: Vec<Vec<usize>>,
}

impl<T: Real> FomAssembler<T> {
    pub fn new(model: &MultipatchModel<T>) -> Self {
        let dofs = model.dofs();
        let patches: Vec<PatchAssembler<T>> = (0..model.n_patches())
            .into_par_iter()
            .map(|k| {
                let free: Vec<bool> = dofs.patch_free(k).iter().map(Option::is_some).collect();
                PatchAssembler::new(PatchQuadrature::new(model.patch(k).map()), &free)
            })
            .collect();
        let slot_to_free: Vec<Vec<usize>> = patches
            .iter()
            .enumerate()
            .map(|(k, pa)| {
                let free = dofs.patch_free(k);
                pa.slots().iter().map(|&i| free[i].expect("slot is free")).collect()
            })
            .collect();
        let n = dofs.n_free();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (pa, map) in patches.iter().zip(&slot_to_free) {
            let p = pa.pattern();
            for s in 0..p.nrows() {
                rows[map[s]].extend(p.row(s).0.iter().map(|&t| map[t]));
            }
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = CsrMatrix::from_pattern(n, n, &rows);
        let scatter = patches
            .iter()
            .zip(&slot_to_free)
            .map(|(pa, map)| {
                let p = pa.pattern();
                let mut out = Vec::with_capacity(p.nnz());
                for s in 0..p.nrows() {
                    for &t in p.row(s).0 {
                        out.push(pattern.position(map[s], map[t]).expect("in pattern"));
                    }
                }
                out
            })
            .collect();
        Self {
            patches,
            slot_to_free,
            pattern,
            scatter,
        }
    }

    pub fn n_free(&self) -> usize {
        self.pattern.nrows()
    }

    pub fn n_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn patch(&self, k: usize) -> &PatchAssembler<T> {
        &self.patches[k]
    }

    pub fn slot_to_free(&self, k: usize) -> &[usize] {
        &self.slot_to_free[k]
    }

    pub fn pattern(&self) -> &CsrMatrix<T> {
        &self.pattern
    }

    /// Adds a patch-local matrix (on the pattern of patch `k`) into `global`.
    pub fn scatter_matrix(&self, k: usize, local: &CsrMatrix<T>, global: &mut CsrMatrix<T>) {
        let map = &self.scatter[k];
        let values = global.values_mut();
        for (&p, &v) in map.iter().zip(local.values()) {
            values[p] += v;
        }
    }

    pub fn scatter_vector(&self, k: usize, local: &[T], global: &mut [T]) {
        for (&g, &v) in self.slot_to_free[k].iter().zip(local) {
            global[g] += v;
        }
    }

    /// Global matrix on the shared pattern holding only patch `k`'s part.
    pub fn embed_matrix(&self, k: usize, local: &CsrMatrix<T>) -> CsrMatrix<T> {
        let mut g = self.pattern.clone();
        self.scatter_matrix(k, local, &mut g);
        g
    }

    pub fn embed_vector(&self, k: usize, local: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.n_free()];
        self.scatter_vector(k, local, &mut g);
        g
    }

    pub fn combine(&self, parts: &[(CsrMatrix<T>, Vec<T>)]) -> (CsrMatrix<T>, Vec<T>) {
        let mut a = self.pattern.clone();
        let mut f = vec![T::zero(); self.n_free()];
        for (k, (ak, fk)) in parts.iter().enumerate() {
            self.scatter_matrix(k, ak, &mut a);
            self.scatter_vector(k, fk, &mut f);
        }
        (a, f)
    }

    /// Stiffness and load of the glued system at `mu`.
    pub fn assemble(&self, model: &MultipatchModel<T>, mu: &[T], source: &Source<T>) -> Result<(CsrMatrix<T>, Vec<T>)> {
        let nets = model.instantiate(mu)?;
        let parts: Vec<(CsrMatrix<T>, Vec<T>)> = (0..self.n_patches())
            .into_par_iter()
            .map(|k| self.patches[k].assemble(&nets[k], source, mu))
            .collect::<Result<_>>()?;
        Ok(self.combine(&parts))
    }
}
