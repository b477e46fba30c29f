use std::fmt;
use std::sync::Arc;

use crate::splines::Point;
use crate::Real;

/// Right-hand side `f̃`, evaluated at physical points.
#[derive(Clone)]
pub enum Source<T> {
    Constant(T),
    /// `scale · x₁ x₂ … x_d`.
    Monomial { scale: T },
    Custom(Arc<dyn Fn(&Point<T>) -> T + Send + Sync>),
}

impl<T: Real> Source<T> {
    pub fn eval(&self, x: &Point<T>, dim: usize) -> T {
        match self {
            Source::Constant(c) => *c,
            Source::Monomial { scale } => x[..dim].iter().fold(*scale, |a, &b| a * b),
            Source::Custom(f) => f(x),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Source<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Constant(c) => write!(f, "Constant({c:?})"),
            Source::Monomial { scale } => write!(f, "Monomial {{ scale: {scale:?} }}"),
            Source::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}
