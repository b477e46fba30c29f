use rayon::prelude::*;

use crate::fom::{port_mass, Fom};
use crate::numerics::{Mat, SparseCholesky};
use crate::rb::{pod, PodResult};
use crate::{Real, Result};

/// Basis of the trace space of one global port, on its free DOFs.
#[derive(Clone, Debug, PartialEq)]
pub struct PortSpace<T> {
    pub modes: Vec<Vec<T>>,
    /// Singular values of the snapshot traces (empty for the full space).
    pub sigma: Vec<T>,
    /// Number of DOFs of the port.
    pub n_full: usize,
}

impl<T: Real> PortSpace<T> {
    /// Canonical basis of all port DOFs.
    pub fn full(n: usize) -> Self {
        let modes = (0..n)
            .map(|i| {
                let mut e = vec![T::zero(); n];
                e[i] = T::one();
                e
            })
            .collect();
        Self {
            modes,
            sigma: Vec::new(),
            n_full: n,
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// The leading `n` modes.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            modes: self.modes[..n.min(self.len())].to_vec(),
            sigma: self.sigma.clone(),
            n_full: self.n_full,
        }
    }

    /// Trace of `Σ c_r χ_r`.
    pub fn trace(&self, coefficients: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_full];
        for (c, m) in coefficients.iter().zip(&self.modes) {
            for (o, &x) in out.iter_mut().zip(m) {
                *o += *c * x;
            }
        }
        out
    }
}

/// Factor of the port trace mass matrix at `mu`.
fn mass_factor<T: Real>(fom: &Fom<T>, port: usize, mu: &[T]) -> Result<SparseCholesky<T>> {
    let m: Mat<T> = port_mass(fom.model(), port, mu)?;
    SparseCholesky::factor(&crate::numerics::CsrMatrix::from_dense(&m))
}

/// POD of given interface traces (`traces[p]`: snapshots of port `p`) in the
/// trace mass metric at the reference parameter.
pub fn port_modes_from_traces<T: Real>(fom: &Fom<T>, traces: &[Vec<Vec<T>>], tol: f64) -> Result<Vec<PortSpace<T>>> {
    let mu = fom.reference_mu();
    traces
        .par_iter()
        .enumerate()
        .map(|(p, snaps)| {
            let factor = mass_factor(fom, p, &mu)?;
            let PodResult { basis, sigma } = pod(snaps, &factor, tol)?;
            Ok(PortSpace {
                modes: basis,
                sigma,
                n_full: fom.model().port_dofs(p).len(),
            })
        })
        .collect()
}

/// Interface traces of FOM solutions at the given parameters.
pub fn port_traces<T: Real>(fom: &Fom<T>, mus: &[Vec<T>]) -> Result<Vec<Vec<Vec<T>>>> {
    let sols: Vec<Vec<T>> = mus
        .par_iter()
        .map(|mu| fom.assemble(mu)?.solve())
        .collect::<Result<_>>()?;
    let model = fom.model();
    Ok((0..model.ports().len())
        .map(|p| {
            let free = &model.port_dofs(p).free;
            sols.iter().map(|u| free.iter().map(|&i| u[i]).collect()).collect()
        })
        .collect())
}

/// Empirical port modes from `n_snapshots` FOM solves at LHS parameters.
pub fn build_port_modes<T: Real>(fom: &Fom<T>, n_snapshots: usize, tol: f64, seed: u64) -> Result<Vec<PortSpace<T>>> {
    let mus = fom.model().params().sample_lhs(n_snapshots, seed);
    port_modes_from_traces(fom, &port_traces(fom, &mus)?, tol)
}

pub fn full_port_spaces<T: Real>(fom: &Fom<T>) -> Vec<PortSpace<T>> {
    let model = fom.model();
    (0..model.ports().len()).map(|p| PortSpace::full(model.port_dofs(p).len())).collect()
}
