use crate::numerics::lhs_sample;
use crate::{Error, Real, Result};

/// Parameter box together with the parameters each patch depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSpace<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    patch_params: Vec<Vec<usize>>,
}

impl<T: Real> ParameterSpace<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, patch_params: Vec<Vec<usize>>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension("bound vectors differ in length".into()));
        }
        for (j, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Domain(format!("parameter {j}: need finite bounds with lower < upper")));
            }
        }
        let mut covered = vec![false; lower.len()];
        for (k, list) in patch_params.iter().enumerate() {
            for &j in list {
                if j >= lower.len() {
                    return Err(Error::Domain(format!("patch {k} refers to unknown parameter {j}")));
                }
                covered[j] = true;
            }
        }
        if let Some(j) = covered.iter().position(|&c| !c) {
            return Err(Error::Domain(format!("parameter {j} is not used by any patch")));
        }
        Ok(Self { lower, upper, patch_params })
    }

    /// Box without any patch lists (all patches see every parameter).
    pub fn shared(lower: Vec<T>, upper: Vec<T>, n_patches: usize) -> Result<Self> {
        let all: Vec<usize> = (0..lower.len()).collect();
        Self::new(lower, upper, vec![all; n_patches])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn n_patches(&self) -> usize {
        self.patch_params.len()
    }

    pub fn patch_params(&self, k: usize) -> &[usize] {
        &self.patch_params[k]
    }

    pub fn midpoint(&self) -> Vec<T> {
        self.lower.iter().zip(&self.upper).map(|(&a, &b)| (a + b) * T::lit(0.5)).collect()
    }

    /// Errors with every offending index when `mu` leaves the box.
    pub fn check(&self, mu: &[T]) -> Result<()> {
        if mu.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "parameter vector has {} entries, expected {}",
                mu.len(),
                self.dim()
            )));
        }
        let indices: Vec<usize> = (0..self.dim())
            .filter(|&j| !(mu[j] >= self.lower[j] && mu[j] <= self.upper[j]))
            .collect();
        if indices.is_empty() {
            Ok(())
        } else {
            Err(Error::ParameterOutOfBounds { indices })
        }
    }

    /// Restriction `μ^(k)` of a global parameter vector.
    pub fn local(&self, k: usize, mu: &[T]) -> Vec<T> {
        self.patch_params[k].iter().map(|&j| mu[j]).collect()
    }

    pub fn local_lower(&self, k: usize) -> Vec<T> {
        self.local(k, &self.lower)
    }

    pub fn local_upper(&self, k: usize) -> Vec<T> {
        self.local(k, &self.upper)
    }

    pub fn sample_lhs(&self, n: usize, seed: u64) -> Vec<Vec<T>> {
        lhs_sample(&self.lower, &self.upper, n, seed)
    }

    pub fn sample_local_lhs(&self, k: usize, n: usize, seed: u64) -> Vec<Vec<T>> {
        lhs_sample(&self.local_lower(k), &self.local_upper(k), n, seed)
    }
}
