use crate::fom::{PatchQuadrature, Source, SymTensor};
use crate::geometry::ParameterizedPatch;
use crate::splines::{Jacobian, Point, MAX_DIM};
use crate::{Error, Real, Result};

/// Evaluates a parameter-dependent field on a fixed candidate set.
pub trait CoefficientSampler<T: Real>: Sync {
    fn n_candidates(&self) -> usize;

    /// Values at every candidate.
    fn sample(&self, mu: &[T]) -> Result<Vec<T>>;

    /// Values at selected candidates; the default evaluates everything.
    fn sample_at(&self, mu: &[T], candidates: &[usize]) -> Result<Vec<T>> {
        let all = self.sample(mu)?;
        Ok(candidates.iter().map(|&c| all[c]).collect())
    }
}

/// Which pulled-back coefficient a patch sampler produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientKind {
    /// Unique entries of `DF⁻¹ DF⁻ᵀ |det DF|`.
    Diffusion,
    /// `f̃(F) |det DF|`.
    Source,
}

/// Number of stored components per quadrature point.
pub fn n_components(kind: CoefficientKind, dim: usize) -> usize {
    match kind {
        CoefficientKind::Diffusion => dim * (dim + 1) / 2,
        CoefficientKind::Source => 1,
    }
}

/// Row/column of each unique symmetric component, upper triangle row-major.
pub fn sym_components(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..dim {
        for c in r..dim {
            out.push((r, c));
        }
    }
    out
}

/// Rebuilds the symmetric tensor from its unique components.
pub fn unflatten_sym<T: Real>(values: &[T], dim: usize) -> SymTensor<T> {
    let mut m = [[T::zero(); MAX_DIM]; MAX_DIM];
    for (k, (r, c)) in sym_components(dim).into_iter().enumerate() {
        m[r][c] = values[k];
        m[c][r] = values[k];
    }
    m
}

fn singular<T: Real>(det: T, xi: &Point<T>, dim: usize, mu: &[T]) -> Error {
    Error::SingularGeometry {
        det: det.as_f64(),
        xi: xi[..dim].iter().map(|x| x.as_f64()).collect(),
        mu: mu.iter().map(|x| x.as_f64()).collect(),
    }
}

/// Coefficient sampler of one patch on its local parameters, with the
/// patch's quadrature points as candidates (point-major, component-minor).
pub struct PatchSampler<'a, T> {
    pub kind: CoefficientKind,
    pub quad: &'a PatchQuadrature<T>,
    pub patch: &'a ParameterizedPatch<T>,
    pub source: &'a Source<T>,
}

impl<'a, T: Real> PatchSampler<'a, T> {
    fn n_comp(&self) -> usize {
        n_components(self.kind, self.quad.dim())
    }

    fn qp_per_element(&self) -> usize {
        self.quad.elements()[0].points.len()
    }

    /// Data to evaluate the coefficient at `candidates` without touching
    /// the rest of the patch.
    pub fn stencils(&self, candidates: &[usize]) -> Vec<MagicStencil<T>> {
        let nc = self.n_comp();
        let nq = self.qp_per_element();
        candidates
            .iter()
            .map(|&c| {
                let (qp, comp) = (c / nc, c % nc);
                let el = &self.quad.elements()[qp / nq];
                let p = &el.points[qp % nq];
                MagicStencil {
                    component: comp,
                    xi: p.xi,
                    values: p.values.clone(),
                    grads: p.grads.clone(),
                    base: el.dofs.iter().map(|&i| self.patch.base_points()[i]).collect(),
                    displacements: self
                        .patch
                        .displacements()
                        .iter()
                        .map(|d| el.dofs.iter().map(|&i| d[i]).collect())
                        .collect(),
                }
            })
            .collect()
    }
}

fn components_into<T: Real>(kind: CoefficientKind, source: &Source<T>, x: &Point<T>, jac: &Jacobian<T>, dim: usize, out: &mut Vec<T>) {
    match kind {
        CoefficientKind::Diffusion => {
            let g = jac.pullback_tensor(dim);
            for (r, c) in sym_components(dim) {
                out.push(g[r][c]);
            }
        }
        CoefficientKind::Source => out.push(source.eval(x, dim) * jac.det.abs()),
    }
}

impl<'a, T: Real> CoefficientSampler<T> for PatchSampler<'a, T> {
    fn n_candidates(&self) -> usize {
        self.quad.n_points() * self.n_comp()
    }

    fn sample(&self, mu: &[T]) -> Result<Vec<T>> {
        let dim = self.quad.dim();
        let pts = self.patch.points(mu);
        let mut out = Vec::with_capacity(self.n_candidates());
        for (e, el) in self.quad.elements().iter().enumerate() {
            for q in 0..el.points.len() {
                let g = self
                    .quad
                    .geometry_at(e, q, &pts)
                    .map_err(|det| singular(det, &el.points[q].xi, dim, mu))?;
                components_into(self.kind, self.source, &g.x, &g.jac, dim, &mut out);
            }
        }
        Ok(out)
    }
}

/// Everything needed to evaluate one coefficient component at one magic
/// point: basis data there and the supporting control points.
#[derive(Clone, Debug, PartialEq)]
pub struct MagicStencil<T> {
    pub component: usize,
    pub xi: Point<T>,
    pub values: Vec<T>,
    pub grads: Vec<Point<T>>,
    pub base: Vec<Point<T>>,
    /// `displacements[j][a]` for local parameter `j` and support point `a`.
    pub displacements: Vec<Vec<Point<T>>>,
}

impl<T: Real> MagicStencil<T> {
    pub fn eval(&self, kind: CoefficientKind, source: &Source<T>, dim: usize, mu: &[T]) -> Result<T> {
        let mut x = [T::zero(); MAX_DIM];
        let mut df = [[T::zero(); MAX_DIM]; MAX_DIM];
        for a in 0..self.base.len() {
            let mut p = self.base[a];
            for (d, &m) in self.displacements.iter().zip(mu) {
                for c in 0..MAX_DIM {
                    p[c] += m * d[a][c];
                }
            }
            for r in 0..dim {
                x[r] += self.values[a] * p[r];
                for c in 0..dim {
                    df[r][c] += p[r] * self.grads[a][c];
                }
            }
        }
        let jac = Jacobian::from_df(df, dim).map_err(|det| singular(det, &self.xi, dim, mu))?;
        let mut out = Vec::with_capacity(6);
        components_into(kind, source, &x, &jac, dim, &mut out);
        Ok(out[self.component])
    }
}
