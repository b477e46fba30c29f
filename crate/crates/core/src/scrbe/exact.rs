use rayon::prelude::*;

use super::extension::HarmonicExtender;
use super::layout::{layouts, PatchLayout};
use super::ports::PortSpace;
use super::schur::{patch_contribution, ModeIndex, PatchContribution, SchurSystem};
use crate::fom::Fom;
use crate::numerics::{CsrMatrix, SparseCholesky};
use crate::{Error, Real, Result};

/// Harmonic liftings of the port modes touching one patch.
#[derive(Clone, Debug)]
pub struct PatchLiftings<T> {
    pub layout: PatchLayout,
    /// Skeleton index of each lifting.
    pub modes: Vec<usize>,
    /// `ψ` on the patch slots.
    pub psi: Vec<Vec<T>>,
}

pub fn mode_index<T: Real>(ports: &[PortSpace<T>]) -> ModeIndex {
    ModeIndex::new(&ports.iter().map(PortSpace::len).collect::<Vec<_>>())
}

/// Lifts every mode of every adjacent port into each patch.
pub fn lift_port_modes<T: Real>(fom: &Fom<T>, ports: &[PortSpace<T>]) -> Result<Vec<PatchLiftings<T>>> {
    let model = fom.model();
    if ports.len() != model.ports().len() {
        return Err(Error::Dimension(format!("{} port spaces for {} ports", ports.len(), model.ports().len())));
    }
    for (p, s) in ports.iter().enumerate() {
        let n = model.port_dofs(p).len();
        if s.n_full != n || s.modes.iter().any(|m| m.len() != n) {
            return Err(Error::Dimension(format!("port {p}: modes do not match its {n} DOFs")));
        }
    }
    let index = mode_index(ports);
    layouts(fom)?
        .into_par_iter()
        .enumerate()
        .map(|(k, layout)| {
            let ext = HarmonicExtender::new(fom.assembler().patch(k), layout)?;
            let mut modes = Vec::new();
            let mut psi = Vec::new();
            for (j, ps) in ext.layout().ports.iter().enumerate() {
                for (r, chi) in ports[ps.port].modes.iter().enumerate() {
                    modes.push(index.index(ps.port, r));
                    psi.push(ext.extend(j, chi));
                }
            }
            Ok(PatchLiftings {
                layout: ext.layout().clone(),
                modes,
                psi,
            })
        })
        .collect()
}

/// Solution of a condensed problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ScrbeSolution<T> {
    /// Skeleton coefficients `û`.
    pub skeleton: Vec<T>,
    /// Patch fields on the slots.
    pub fields: Vec<Vec<T>>,
}

impl<T: Real> ScrbeSolution<T> {
    /// Global free DOF vector (single-valued on ports by construction).
    pub fn free(&self, fom: &Fom<T>) -> Vec<T> {
        let mut out = vec![T::zero(); fom.n_free()];
        for (k, f) in self.fields.iter().enumerate() {
            for (&g, &v) in fom.assembler().slot_to_free(k).iter().zip(f) {
                out[g] = v;
            }
        }
        out
    }

    /// Largest disagreement between patch values of a shared DOF.
    pub fn trace_mismatch(&self, fom: &Fom<T>) -> T {
        let mut seen: Vec<Option<T>> = vec![None; fom.n_free()];
        let mut worst = T::zero();
        for (k, f) in self.fields.iter().enumerate() {
            for (&g, &v) in fom.assembler().slot_to_free(k).iter().zip(f) {
                match seen[g] {
                    Some(w) => worst = worst.max((w - v).abs()),
                    None => seen[g] = Some(v),
                }
            }
        }
        worst
    }
}

/// Static condensation with exact bubble solves on every patch.
pub struct ExactCondenser<'a, T> {
    fom: &'a Fom<T>,
    index: ModeIndex,
    patches: Vec<PatchLiftings<T>>,
}

struct ExactPatch<T> {
    contribution: PatchContribution<T>,
    phi: Vec<Vec<T>>,
    source: Vec<T>,
}

fn bubble_solve<T: Real>(f: &Option<SparseCholesky<T>>, layout: &PatchLayout, rhs_slots: &[T]) -> Vec<T> {
    match f {
        Some(f) => layout.embed_bubble(&f.solve(&layout.restrict_bubble(rhs_slots))),
        None => vec![T::zero(); layout.n_slots],
    }
}

impl<'a, T: Real> ExactCondenser<'a, T> {
    pub fn new(fom: &'a Fom<T>, ports: &[PortSpace<T>]) -> Result<Self> {
        Ok(Self {
            fom,
            index: mode_index(ports),
            patches: lift_port_modes(fom, ports)?,
        })
    }

    pub fn liftings(&self) -> &[PatchLiftings<T>] {
        &self.patches
    }

    fn patch(&self, k: usize, mu: &[T]) -> Result<ExactPatch<T>> {
        let model = self.fom.model();
        let lift = &self.patches[k];
        let lay = &lift.layout;
        let pa = self.fom.assembler().patch(k);
        let (a, f): (CsrMatrix<T>, Vec<T>) =
            pa.assemble(&model.patch_points(k, mu), self.fom.source(), &model.params().local(k, mu))?;
        let factor = if lay.bubble.is_empty() {
            None
        } else {
            Some(SparseCholesky::factor(&a.submatrix(&lay.bubble, &lay.bubble))?)
        };
        let phi: Vec<Vec<T>> = lift
            .psi
            .iter()
            .map(|psi| {
                let b = bubble_solve(&factor, lay, &a.matvec(psi));
                psi.iter().zip(&b).map(|(&p, &q)| p - q).collect()
            })
            .collect();
        let source = bubble_solve(&factor, lay, &f);
        let ab = a.matvec(&source);
        let residual: Vec<T> = f.iter().zip(&ab).map(|(&x, &y)| x - y).collect();
        let contribution = patch_contribution(lift.modes.clone(), &phi, |v| a.matvec(v), &residual);
        Ok(ExactPatch {
            contribution,
            phi,
            source,
        })
    }

    pub fn solve(&self, mu: &[T]) -> Result<ScrbeSolution<T>> {
        self.fom.model().params().check(mu)?;
        let parts: Vec<ExactPatch<T>> = (0..self.patches.len())
            .into_par_iter()
            .map(|k| self.patch(k, mu))
            .collect::<Result<_>>()?;
        let contributions: Vec<PatchContribution<T>> = parts.iter().map(|p| p.contribution.clone()).collect();
        let skeleton = SchurSystem::assemble(self.index.len(), &contributions).solve()?;
        let fields = parts
            .into_iter()
            .zip(&self.patches)
            .map(|(p, lift)| {
                let mut u = p.source;
                for (&m, phi) in lift.modes.iter().zip(&p.phi) {
                    for (o, &x) in u.iter_mut().zip(phi) {
                        *o += skeleton[m] * x;
                    }
                }
                u
            })
            .collect();
        Ok(ScrbeSolution { skeleton, fields })
    }

    pub fn schur(&self, mu: &[T]) -> Result<SchurSystem<T>> {
        let parts: Vec<PatchContribution<T>> = (0..self.patches.len())
            .into_par_iter()
            .map(|k| self.patch(k, mu).map(|p| p.contribution))
            .collect::<Result<_>>()?;
        Ok(SchurSystem::assemble(self.index.len(), &parts))
    }
}
