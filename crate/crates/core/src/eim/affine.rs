use std::sync::Arc;

use rayon::prelude::*;

use super::sampler::{n_components, unflatten_sym, CoefficientKind, MagicStencil, PatchSampler};
use super::train::{eim_train, EimBasis, EimOptions};
use crate::fom::{Fom, PatchAssembler, Source};
use crate::geometry::ParameterSpace;
use crate::numerics::CsrMatrix;
use crate::{Error, Real, Result};

/// Parameter functions `θ^a_q(μ)`, `θ^f_q(μ)` of an affine expansion.
pub trait AffineCoefficients<T>: Send + Sync {
    fn n_a(&self) -> usize;
    fn n_f(&self) -> usize;
    fn theta(&self, mu: &[T]) -> Result<(Vec<T>, Vec<T>)>;
}

/// Affine coefficients given by closures.
pub struct FnCoefficients<T> {
    pub n_a: usize,
    pub n_f: usize,
    #[allow(clippy::type_complexity)]
    pub f: Box<dyn Fn(&[T]) -> (Vec<T>, Vec<T>) + Send + Sync>,
}

impl<T: Real> AffineCoefficients<T> for FnCoefficients<T> {
    fn n_a(&self) -> usize {
        self.n_a
    }

    fn n_f(&self) -> usize {
        self.n_f
    }

    fn theta(&self, mu: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        Ok((self.f)(mu))
    }
}

/// `A(μ) = Σ θ^a_q(μ) A_q`, `f(μ) = Σ θ^f_q(μ) f_q` with μ-independent
/// terms sharing one sparsity pattern.
#[derive(Clone)]
pub struct AffineOperator<T> {
    pub a_terms: Vec<CsrMatrix<T>>,
    pub f_terms: Vec<Vec<T>>,
    pub coefficients: Arc<dyn AffineCoefficients<T>>,
}

impl<T: Real> AffineOperator<T> {
    pub fn new(
        a_terms: Vec<CsrMatrix<T>>,
        f_terms: Vec<Vec<T>>,
        coefficients: Arc<dyn AffineCoefficients<T>>,
    ) -> Result<Self> {
        if a_terms.len() != coefficients.n_a() || f_terms.len() != coefficients.n_f() {
            return Err(Error::Dimension(format!(
                "{} / {} terms but {} / {} coefficients",
                a_terms.len(),
                f_terms.len(),
                coefficients.n_a(),
                coefficients.n_f()
            )));
        }
        if a_terms.is_empty() || f_terms.is_empty() {
            return Err(Error::Dimension("affine operator needs at least one term of each kind".into()));
        }
        Ok(Self {
            a_terms,
            f_terms,
            coefficients,
        })
    }

    pub fn dim(&self) -> usize {
        self.f_terms[0].len()
    }

    pub fn assemble(&self, mu: &[T]) -> Result<(CsrMatrix<T>, Vec<T>)> {
        let (ta, tf) = self.coefficients.theta(mu)?;
        let refs: Vec<&CsrMatrix<T>> = self.a_terms.iter().collect();
        let a = CsrMatrix::linear_combination(&ta, &refs)?;
        let mut f = vec![T::zero(); self.dim()];
        for (t, v) in tf.iter().zip(&self.f_terms) {
            for (o, &x) in f.iter_mut().zip(v) {
                *o += *t * x;
            }
        }
        Ok((a, f))
    }
}

/// Patch-local affine terms (on the patch slots of a [`PatchAssembler`]).
#[derive(Clone, Debug, PartialEq)]
pub struct PatchAffineTerms<T> {
    pub a: Vec<CsrMatrix<T>>,
    pub f: Vec<Vec<T>>,
}

/// Assembles `A_m` with `φ^α_m` as tensor coefficient and `f_m` with `φ^f_m`.
pub fn assemble_affine_terms<T: Real>(
    pa: &PatchAssembler<T>,
    alpha: &EimBasis<T>,
    force: &EimBasis<T>,
) -> PatchAffineTerms<T> {
    let dim = pa.dim();
    let nc = n_components(CoefficientKind::Diffusion, dim);
    let nq = pa.quadrature().elements()[0].points.len();
    let a = alpha
        .phi
        .par_iter()
        .map(|phi| {
            pa.stiffness_with(|e, q| {
                let qp = e * nq + q;
                unflatten_sym(&phi[qp * nc..(qp + 1) * nc], dim)
            })
        })
        .collect();
    let f = force.phi.par_iter().map(|phi| pa.load_with(|e, q| phi[e * nq + q])).collect();
    PatchAffineTerms { a, f }
}

/// Trained EIM pair of one patch plus its online evaluation data.
#[derive(Clone, Debug)]
pub struct EimPatch<T> {
    pub alpha: EimBasis<T>,
    pub force: EimBasis<T>,
    alpha_stencils: Vec<MagicStencil<T>>,
    force_stencils: Vec<MagicStencil<T>>,
    dim: usize,
    source: Source<T>,
}

impl<T: Real> EimPatch<T> {
    pub fn new(fom: &Fom<T>, k: usize, alpha: EimBasis<T>, force: EimBasis<T>) -> Self {
        let quad = fom.assembler().patch(k).quadrature();
        let sampler = |kind| PatchSampler {
            kind,
            quad,
            patch: fom.model().patch(k),
            source: fom.source(),
        };
        let alpha_stencils = sampler(CoefficientKind::Diffusion).stencils(&alpha.magic);
        let force_stencils = sampler(CoefficientKind::Source).stencils(&force.magic);
        Self {
            alpha,
            force,
            alpha_stencils,
            force_stencils,
            dim: fom.model().dim(),
            source: fom.source().clone(),
        }
    }

    /// Reassembles a patch from stored parts (`phi` may be empty when only
    /// online evaluation is needed).
    pub fn from_parts(
        alpha: EimBasis<T>,
        force: EimBasis<T>,
        alpha_stencils: Vec<MagicStencil<T>>,
        force_stencils: Vec<MagicStencil<T>>,
        dim: usize,
        source: Source<T>,
    ) -> Result<Self> {
        if alpha_stencils.len() != alpha.len() || force_stencils.len() != force.len() {
            return Err(Error::Dimension("one stencil per magic point".into()));
        }
        Ok(Self {
            alpha,
            force,
            alpha_stencils,
            force_stencils,
            dim,
            source,
        })
    }

    pub fn alpha_stencils(&self) -> &[MagicStencil<T>] {
        &self.alpha_stencils
    }

    pub fn force_stencils(&self) -> &[MagicStencil<T>] {
        &self.force_stencils
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &Source<T> {
        &self.source
    }

    /// `(θ^α, θ^f)` at local parameters; cost independent of the mesh.
    pub fn theta(&self, mu_local: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let eval = |stencils: &[MagicStencil<T>], kind| -> Result<Vec<T>> {
            stencils.iter().map(|s| s.eval(kind, &self.source, self.dim, mu_local)).collect()
        };
        let ga = eval(&self.alpha_stencils, CoefficientKind::Diffusion)?;
        let gf = eval(&self.force_stencils, CoefficientKind::Source)?;
        Ok((self.alpha.coefficients(&ga), self.force.coefficients(&gf)))
    }
}

/// Per-patch EIM expansions of the whole model; θ vectors are the patch
/// vectors concatenated in patch order.
#[derive(Clone, Debug)]
pub struct EimModel<T> {
    pub patches: Vec<EimPatch<T>>,
    params: ParameterSpace<T>,
}

impl<T: Real> EimModel<T> {
    pub fn new(fom: &Fom<T>, patches: Vec<EimPatch<T>>) -> Self {
        Self {
            patches,
            params: fom.model().params().clone(),
        }
    }

    pub fn from_parts(patches: Vec<EimPatch<T>>, params: ParameterSpace<T>) -> Result<Self> {
        if patches.len() != params.n_patches() {
            return Err(Error::Dimension(format!(
                "{} EIM patches for {} model patches",
                patches.len(),
                params.n_patches()
            )));
        }
        Ok(Self { patches, params })
    }

    pub fn params(&self) -> &ParameterSpace<T> {
        &self.params
    }

    pub fn patch_theta(&self, k: usize, mu: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        self.patches[k].theta(&self.params.local(k, mu))
    }

    pub fn term_counts(&self) -> Vec<(usize, usize)> {
        self.patches.iter().map(|p| (p.alpha.len(), p.force.len())).collect()
    }
}

impl<T: Real> AffineCoefficients<T> for EimModel<T> {
    fn n_a(&self) -> usize {
        self.patches.iter().map(|p| p.alpha.len()).sum()
    }

    fn n_f(&self) -> usize {
        self.patches.iter().map(|p| p.force.len()).sum()
    }

    fn theta(&self, mu: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        self.params.check(mu)?;
        let mut ta = Vec::with_capacity(self.n_a());
        let mut tf = Vec::with_capacity(self.n_f());
        for k in 0..self.patches.len() {
            let (a, f) = self.patch_theta(k, mu)?;
            ta.extend(a);
            tf.extend(f);
        }
        Ok((ta, tf))
    }
}

/// Local training set of patch `k` for the given global seed.
pub fn patch_train_set<T: Real>(fom: &Fom<T>, k: usize, n: usize, seed: u64) -> Vec<Vec<T>> {
    fom.model().params().sample_local_lhs(k, n, seed.wrapping_add(k as u64))
}

/// Trains `(g_α, g_f)` for patch `k` on its local parameters.
pub fn train_patch<T: Real>(fom: &Fom<T>, k: usize, train: &[Vec<T>], opts: &EimOptions) -> Result<EimPatch<T>> {
    let quad = fom.assembler().patch(k).quadrature();
    let sampler = |kind| PatchSampler {
        kind,
        quad,
        patch: fom.model().patch(k),
        source: fom.source(),
    };
    let alpha = eim_train(&sampler(CoefficientKind::Diffusion), train, opts)?;
    let force = eim_train(&sampler(CoefficientKind::Source), train, opts)?;
    Ok(EimPatch::new(fom, k, alpha, force))
}

pub fn train_eim_model<T: Real>(fom: &Fom<T>, n_train: usize, seed: u64, opts: &EimOptions) -> Result<EimModel<T>> {
    let patches = (0..fom.model().n_patches())
        .map(|k| train_patch(fom, k, &patch_train_set(fom, k, n_train, seed), opts))
        .collect::<Result<_>>()?;
    Ok(EimModel::new(fom, patches))
}

/// Global affine operator of the FOM from a trained EIM model.
pub fn affine_operator<T: Real>(fom: &Fom<T>, eim: Arc<EimModel<T>>) -> AffineOperator<T> {
    let asm = fom.assembler();
    let mut a_terms = Vec::new();
    let mut f_terms = Vec::new();
    for (k, p) in eim.patches.iter().enumerate() {
        let local = assemble_affine_terms(asm.patch(k), &p.alpha, &p.force);
        a_terms.extend(local.a.iter().map(|m| asm.embed_matrix(k, m)));
        f_terms.extend(local.f.iter().map(|v| asm.embed_vector(k, v)));
    }
    AffineOperator::new(a_terms, f_terms, eim).expect("counts agree by construction")
}
