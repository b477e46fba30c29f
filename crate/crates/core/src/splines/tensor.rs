//! Tensor-product B-spline bases of dimension 1, 2 or 3.

use super::knots::KnotVector;
use crate::{Error, Real, Result};

pub const MAX_DIM: usize = 3;

/// Physical or parametric point; entries beyond the dimension are zero.
pub type Point<T> = [T; MAX_DIM];

/// Non-vanishing tensor basis functions at one parametric point.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEval<T> {
    /// Lexicographic indices of the supported functions.
    pub indices: Vec<usize>,
    pub values: Vec<T>,
    /// Parametric gradients `∂/∂ξ_j`.
    pub grads: Vec<Point<T>>,
}

/// One tensor element (product of non-degenerate knot spans).
#[derive(Clone, Debug, PartialEq)]
pub struct Element<T> {
    pub spans: [usize; MAX_DIM],
    pub lower: Point<T>,
    pub upper: Point<T>,
}

impl<T: Real> Element<T> {
    pub fn volume(&self, dim: usize) -> T {
        (0..dim).map(|d| self.upper[d] - self.lower[d]).fold(T::one(), |a, b| a * b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorBasis<T> {
    dirs: Vec<KnotVector<T>>,
}

impl<T: Real> TensorBasis<T> {
    pub fn new(dirs: Vec<KnotVector<T>>) -> Result<Self> {
        if dirs.is_empty() || dirs.len() > MAX_DIM {
            return Err(Error::Dimension(format!(
                "tensor basis needs 1..={MAX_DIM} directions, got {}",
                dirs.len()
            )));
        }
        let p = dirs[0].degree();
        if dirs.iter().any(|k| k.degree() != p) {
            return Err(Error::InvalidKnots(
                "degree must be identical in all parametric directions".into(),
            ));
        }
        Ok(Self { dirs })
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn degree(&self) -> usize {
        self.dirs[0].degree()
    }

    pub fn direction(&self, d: usize) -> &KnotVector<T> {
        &self.dirs[d]
    }

    pub fn directions(&self) -> &[KnotVector<T>] {
        &self.dirs
    }

    pub fn shape(&self) -> Vec<usize> {
        self.dirs.iter().map(KnotVector::num_basis).collect()
    }

    pub fn num_basis(&self) -> usize {
        self.shape().iter().product()
    }

    /// Lexicographic index, first direction fastest.
    pub fn linear_index(&self, multi: &[usize]) -> usize {
        let shape = self.shape();
        let mut idx = 0;
        for d in (0..self.dim()).rev() {
            idx = idx * shape[d] + multi[d];
        }
        idx
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let shape = self.shape();
        let mut m = [0usize; MAX_DIM];
        for d in 0..self.dim() {
            m[d] = idx % shape[d];
            idx /= shape[d];
        }
        m
    }

    pub fn elements(&self) -> Vec<Element<T>> {
        let per_dir: Vec<Vec<(usize, T, T)>> = self.dirs.iter().map(KnotVector::elements).collect();
        let counts: Vec<usize> = per_dir.iter().map(Vec::len).collect();
        let total: usize = counts.iter().product();
        let mut out = Vec::with_capacity(total);
        for mut e in 0..total {
            let mut el = Element {
                spans: [0; MAX_DIM],
                lower: [T::zero(); MAX_DIM],
                upper: [T::zero(); MAX_DIM],
            };
            for d in 0..self.dim() {
                let (s, a, b) = per_dir[d][e % counts[d]];
                e /= counts[d];
                el.spans[d] = s;
                el.lower[d] = a;
                el.upper[d] = b;
            }
            out.push(el);
        }
        out
    }

    /// Basis values and parametric gradients at `xi`.
    pub fn eval(&self, xi: &[T]) -> Result<BasisEval<T>> {
        let mut spans = [0usize; MAX_DIM];
        for d in 0..self.dim() {
            spans[d] = self.dirs[d].find_span(xi[d])?;
        }
        Ok(self.eval_on_spans(&spans, xi))
    }

    /// As [`Self::eval`] with the knot spans already known.
    pub fn eval_on_spans(&self, spans: &[usize; MAX_DIM], xi: &[T]) -> BasisEval<T> {
        let dim = self.dim();
        let p = self.degree();
        let per_dir: Vec<Vec<Vec<T>>> = (0..dim)
            .map(|d| {
                self.dirs[d]
                    .basis_derivatives(spans[d], xi[d], 1.min(p))
                    .expect("first derivatives exist")
            })
            .collect();
        let n1 = p + 1;
        let count = n1.pow(dim as u32);
        let mut out = BasisEval {
            indices: Vec::with_capacity(count),
            values: Vec::with_capacity(count),
            grads: Vec::with_capacity(count),
        };
        let shape = self.shape();
        for local in 0..count {
            let mut r = [0usize; MAX_DIM];
            let mut rem = local;
            for d in 0..dim {
                r[d] = rem % n1;
                rem /= n1;
            }
            let mut idx = 0;
            for d in (0..dim).rev() {
                idx = idx * shape[d] + spans[d] - p + r[d];
            }
            let mut value = T::one();
            let mut grad = [T::one(); MAX_DIM];
            for d in 0..dim {
                let v = per_dir[d][0][r[d]];
                let dv = if p == 0 { T::zero() } else { per_dir[d][1][r[d]] };
                value *= v;
                for (g, gd) in grad.iter_mut().enumerate().take(dim) {
                    *gd *= if g == d { dv } else { v };
                }
            }
            for g in grad.iter_mut().skip(dim) {
                *g = T::zero();
            }
            out.indices.push(idx);
            out.values.push(value);
            out.grads.push(grad);
        }
        out
    }

    /// Inserts `knots` (in order) along `direction`, transforming per-function
    /// data rows with the Boehm rule.
    pub fn insert_knots(
        &self,
        direction: usize,
        knots: &[T],
        rows: &[Vec<T>],
    ) -> Result<(Self, Vec<Vec<T>>)> {
        if direction >= self.dim() {
            return Err(Error::Domain(format!("direction {direction} out of range")));
        }
        assert_eq!(rows.len(), self.num_basis(), "row count");
        let mut basis = self.clone();
        let mut data = rows.to_vec();
        for &x in knots {
            let shape = basis.shape();
            let kv = &basis.dirs[direction];
            let n_dir = shape[direction];
            let stride: usize = shape[..direction].iter().product();
            let outer: usize = shape[direction + 1..].iter().product();
            let mut new_kv = None;
            let mut new_data = vec![Vec::new(); basis.num_basis() / n_dir * (n_dir + 1)];
            for o in 0..outer {
                for s in 0..stride {
                    let line: Vec<Vec<T>> = (0..n_dir)
                        .map(|i| data[s + stride * (i + n_dir * o)].clone())
                        .collect();
                    let (kv2, refined) = kv.insert(x, &line)?;
                    for (i, row) in refined.into_iter().enumerate() {
                        new_data[s + stride * (i + (n_dir + 1) * o)] = row;
                    }
                    new_kv = Some(kv2);
                }
            }
            basis.dirs[direction] = new_kv.expect("non-empty basis");
            data = new_data;
        }
        Ok((basis, data))
    }
}
