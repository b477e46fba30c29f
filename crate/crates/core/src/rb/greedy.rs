use super::problem::AffineProblem;
use super::space::{ReducedSpace, SpaceBuilder};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyOptions {
    pub tol: f64,
    pub n_max: usize,
    /// Use `Δ / ‖u_N‖_X` instead of `Δ` as the selection and stopping
    /// indicator.
    pub relative: bool,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            n_max: 100,
            relative: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreedyStop {
    Tolerance,
    MaxSize,
    /// The selected snapshot was already in the span of the basis.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyTrace {
    /// Training indices in selection order.
    pub selected: Vec<usize>,
    /// Maximal indicator over the training set before each enrichment, and
    /// after the last one.
    pub history: Vec<f64>,
    pub stop: GreedyStop,
}

/// Indicator of a reduced solution: absolute or relative estimator.
fn indicator<T: Real>(space: &ReducedSpace<T>, ta: &[T], tf: &[T], relative: bool) -> Result<f64> {
    let sol = space.solve(ta, tf)?;
    let delta = sol.estimator.as_f64();
    if !relative || space.is_empty() {
        return Ok(delta);
    }
    // The basis is X-orthonormal, hence ‖V u‖_X = |u|.
    let norm = sol.coefficients.iter().map(|&c| c * c).sum::<T>().sqrt().as_f64();
    Ok(if norm > 0.0 { delta / norm } else { f64::INFINITY })
}

/// Residual-estimator greedy over a training set given by its affine
/// coefficients `(θ_a, θ_f)`.
pub fn greedy_theta<T: Real>(
    problem: &AffineProblem<T>,
    train: &[(Vec<T>, Vec<T>)],
    opts: &GreedyOptions,
) -> Result<(ReducedSpace<T>, GreedyTrace)> {
    if train.is_empty() {
        return Err(Error::Degenerate("empty training set".into()));
    }
    let mut builder = SpaceBuilder::new(problem);
    let mut selected = Vec::new();
    let mut history = Vec::new();
    let stop = loop {
        let space = builder.space();
        let values: Vec<f64> = {
            use rayon::prelude::*;
            train
                .par_iter()
                .map(|(ta, tf)| indicator(space, ta, tf, opts.relative))
                .collect::<Result<_>>()?
        };
        let (best, &max) = values
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
        history.push(max);
        if max <= opts.tol {
            break GreedyStop::Tolerance;
        }
        if builder.space().len() >= opts.n_max {
            break GreedyStop::MaxSize;
        }
        if selected.contains(&best) {
            break GreedyStop::Exhausted;
        }
        let (ta, tf) = &train[best];
        let u = problem.solve_theta(ta, tf)?;
        if !builder.push(&u) {
            break GreedyStop::Exhausted;
        }
        selected.push(best);
        log::debug!("greedy: N = {}, indicator {:e}", selected.len(), max);
    };
    Ok((
        builder.into_space(),
        GreedyTrace {
            selected,
            history,
            stop,
        },
    ))
}

/// [`greedy_theta`] on parameter points.
pub fn greedy<T: Real>(
    problem: &AffineProblem<T>,
    train: &[Vec<T>],
    opts: &GreedyOptions,
) -> Result<(ReducedSpace<T>, GreedyTrace)> {
    let thetas = train.iter().map(|mu| problem.theta(mu)).collect::<Result<Vec<_>>>()?;
    greedy_theta(problem, &thetas, opts)
}
