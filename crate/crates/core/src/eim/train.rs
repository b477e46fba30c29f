use rayon::prelude::*;

use super::sampler::CoefficientSampler;
use super::store::SnapshotStore;
use crate::numerics::{solve_unit_lower, Mat};
use crate::{Error, Real, Result};

/// Residuals below this (relative to the largest snapshot) mean the
/// snapshot family is exhausted.
pub const EXHAUSTION_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct EimOptions {
    /// Target relative max-norm error on the training set.
    pub tol: f64,
    pub max_terms: usize,
    /// Snapshots beyond this many bytes are kept in a temporary file.
    pub memory_budget: usize,
}

impl Default for EimOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_terms: 100,
            memory_budget: 1 << 30,
        }
    }
}

/// Why training stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EimStop {
    Tolerance,
    MaxTerms,
    Exhausted,
}

/// Empirical interpolation basis: `I_M g = Σ θ_m φ_m` with `B θ = g(T_M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EimBasis<T> {
    pub magic: Vec<usize>,
    pub phi: Vec<Vec<T>>,
    /// `B[q][m] = φ_m(t_q)`: unit lower triangular.
    pub b: Mat<T>,
    /// Largest relative training error after each added term.
    pub history: Vec<T>,
    /// Train-set index chosen at each step.
    pub chosen: Vec<usize>,
    pub stop: EimStop,
}

impl<T: Real> EimBasis<T> {
    pub fn len(&self) -> usize {
        self.magic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magic.is_empty()
    }

    pub fn n_candidates(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }

    /// Coefficients from the values at the magic points. The first `m`
    /// entries are the coefficients of the `m`-term truncation.
    pub fn coefficients(&self, at_magic: &[T]) -> Vec<T> {
        assert_eq!(at_magic.len(), self.len(), "one value per magic point");
        solve_unit_lower(&self.b, at_magic)
    }

    pub fn interpolate(&self, theta: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_candidates()];
        for (t, phi) in theta.iter().zip(&self.phi) {
            for (o, &p) in out.iter_mut().zip(phi) {
                *o += *t * p;
            }
        }
        out
    }
}

fn max_abs<T: Real>(v: &[T]) -> (usize, T) {
    let mut best = (0, T::zero());
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best.1 {
            best = (i, x.abs());
        }
    }
    best
}

/// Greedy EIM over `train`; selection uses the relative max-norm error
/// `‖g − I_m g‖∞ / ‖g‖∞` (the first term takes the largest snapshot), ties
/// resolved towards the lowest index.
pub fn eim_train<T: Real, S: CoefficientSampler<T> + ?Sized>(
    sampler: &S,
    train: &[Vec<T>],
    opts: &EimOptions,
) -> Result<EimBasis<T>> {
    if train.is_empty() {
        return Err(Error::Domain("EIM training set is empty".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain("EIM tolerance must be positive".into()));
    }
    let n = sampler.n_candidates();
    let mut store = SnapshotStore::new(train.len(), n, opts.memory_budget)?;
    let mut scale = vec![T::zero(); train.len()];
    let mut err = vec![T::zero(); train.len()];
    const CHUNK: usize = 16;
    for start in (0..train.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(train.len());
        let snaps: Vec<Vec<T>> = (start..end)
            .into_par_iter()
            .map(|i| sampler.sample(&train[i]))
            .collect::<Result<_>>()?;
        for (i, s) in (start..end).zip(snaps) {
            scale[i] = max_abs(&s).1;
            err[i] = scale[i];
            store.set(i, s)?;
        }
    }
    let global_scale = scale.iter().copied().fold(T::zero(), T::max);
    let rel = |e: T, s: T| if s > T::zero() { e / s } else { T::zero() };
    let mut basis = EimBasis {
        magic: Vec::new(),
        phi: Vec::new(),
        b: Mat::zeros(0, 0),
        history: Vec::new(),
        chosen: Vec::new(),
        stop: EimStop::MaxTerms,
    };
    if global_scale == T::zero() {
        return Err(Error::Degenerate("all EIM snapshots vanish".into()));
    }
    loop {
        let pick = if basis.is_empty() {
            (0..train.len()).fold(0, |b, i| if err[i] > err[b] { i } else { b })
        } else {
            (0..train.len()).fold(0, |b, i| if rel(err[i], scale[i]) > rel(err[b], scale[b]) { i } else { b })
        };
        if !basis.is_empty() && rel(err[pick], scale[pick]).as_f64() <= opts.tol {
            basis.stop = EimStop::Tolerance;
            break;
        }
        if basis.len() >= opts.max_terms {
            basis.stop = EimStop::MaxTerms;
            break;
        }
        if err[pick].as_f64() < EXHAUSTION_TOLERANCE * global_scale.as_f64() {
            basis.stop = EimStop::Exhausted;
            break;
        }
        let r = store.get(pick)?;
        let (t, _) = max_abs(&r);
        if basis.magic.contains(&t) {
            basis.stop = EimStop::Exhausted;
            break;
        }
        let inv = T::one() / r[t];
        let phi: Vec<T> = r.iter().map(|&v| v * inv).collect();
        let m = basis.len();
        let mut b = Mat::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..m {
                b[(i, j)] = basis.b[(i, j)];
            }
        }
        for j in 0..m {
            b[(m, j)] = basis.phi[j][t];
        }
        b[(m, m)] = T::one();
        basis.b = b;
        basis.magic.push(t);
        basis.chosen.push(pick);
        // r ← r − r(t) φ keeps every stored residual orthogonal to the
        // magic points selected so far.
        for i in 0..train.len() {
            let mut ri = store.get(i)?;
            let c = ri[t];
            if c != T::zero() {
                for (v, &p) in ri.iter_mut().zip(&phi) {
                    *v -= c * p;
                }
            }
            err[i] = max_abs(&ri).1;
            store.set(i, ri)?;
        }
        basis.phi.push(phi);
        let worst = (0..train.len()).map(|i| rel(err[i], scale[i])).fold(T::zero(), T::max);
        basis.history.push(worst);
    }
    log::info!("EIM: {} terms, stop {:?}", basis.len(), basis.stop);
    Ok(basis)
}

/// Relative max-norm interpolation errors on a test set.
#[derive(Clone, Debug, PartialEq)]
pub struct EimErrorReport<T> {
    pub errors: Vec<T>,
    pub max: T,
    pub mean: T,
}

pub fn eim_error_report<T: Real, S: CoefficientSampler<T> + ?Sized>(
    basis: &EimBasis<T>,
    sampler: &S,
    test: &[Vec<T>],
) -> Result<EimErrorReport<T>> {
    let errors: Vec<T> = test
        .par_iter()
        .map(|mu| {
            let g = sampler.sample(mu)?;
            let at: Vec<T> = basis.magic.iter().map(|&t| g[t]).collect();
            let ig = basis.interpolate(&basis.coefficients(&at));
            let e = g.iter().zip(&ig).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max);
            let s = max_abs(&g).1;
            Ok(if s > T::zero() { e / s } else { e })
        })
        .collect::<Result<_>>()?;
    let max = errors.iter().copied().fold(T::zero(), T::max);
    let mean = errors.iter().copied().sum::<T>() / T::from_usize_lossy(errors.len().max(1));
    Ok(EimErrorReport { errors, max, mean })
}

/// Largest relative test error of the `m`-term truncation, `m = 1..=M`.
pub fn eim_error_curve<T: Real, S: CoefficientSampler<T> + ?Sized>(
    basis: &EimBasis<T>,
    sampler: &S,
    test: &[Vec<T>],
) -> Result<Vec<T>> {
    let per_mu: Vec<Vec<T>> = test
        .par_iter()
        .map(|mu| {
            let g = sampler.sample(mu)?;
            let s = max_abs(&g).1;
            let at: Vec<T> = basis.magic.iter().map(|&t| g[t]).collect();
            let mut r = g.clone();
            let theta = basis.coefficients(&at);
            let mut out = Vec::with_capacity(basis.len());
            for (t, phi) in theta.iter().zip(&basis.phi) {
                for (v, &p) in r.iter_mut().zip(phi) {
                    *v -= *t * p;
                }
                let e = max_abs(&r).1;
                out.push(if s > T::zero() { e / s } else { e });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok((0..basis.len())
        .map(|m| per_mu.iter().map(|e| e[m]).fold(T::zero(), T::max))
        .collect())
}
