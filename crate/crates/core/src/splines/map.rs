//! NURBS geometric maps `F: [0,1]^d → R^d` and their Jacobians.

use super::knots::KnotVector;
use super::tensor::{BasisEval, Point, TensorBasis, MAX_DIM};
use crate::{Error, Real, Result};

/// Control points and (parameter-independent) weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlNet<T> {
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> ControlNet<T> {
    pub fn new(points: Vec<Point<T>>, weights: Vec<T>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} control points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > T::zero())) {
            return Err(Error::Domain("weights must be strictly positive".into()));
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Jacobian data at a parametric point. `df[i][j] = ∂F_i/∂ξ_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobian<T> {
    pub df: [[T; MAX_DIM]; MAX_DIM],
    pub det: T,
    pub inv: [[T; MAX_DIM]; MAX_DIM],
}

impl<T: Real> Jacobian<T> {
    /// Builds the Jacobian from `df`; fails when `det DF <= 0`.
    pub fn from_df(df: [[T; MAX_DIM]; MAX_DIM], dim: usize) -> std::result::Result<Self, T> {
        let z = T::zero();
        let mut inv = [[z; MAX_DIM]; MAX_DIM];
        let det = match dim {
            1 => {
                let d = df[0][0];
                if d > z {
                    inv[0][0] = T::one() / d;
                }
                d
            }
            2 => {
                let d = df[0][0] * df[1][1] - df[0][1] * df[1][0];
                if d > z {
                    inv[0][0] = df[1][1] / d;
                    inv[0][1] = -df[0][1] / d;
                    inv[1][0] = -df[1][0] / d;
                    inv[1][1] = df[0][0] / d;
                }
                d
            }
            _ => {
                let a = &df;
                let c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
                let c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
                let c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
                let d = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
                if d > z {
                    inv[0][0] = c00 / d;
                    inv[1][0] = c01 / d;
                    inv[2][0] = c02 / d;
                    inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / d;
                    inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / d;
                    inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / d;
                    inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / d;
                    inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / d;
                    inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / d;
                }
                d
            }
        };
        if !(det > z) {
            return Err(det);
        }
        Ok(Self { df, det, inv })
    }

    /// Symmetric `DF⁻¹ DF⁻ᵀ |det DF|` (the pulled-back diffusion tensor).
    pub fn pullback_tensor(&self, dim: usize) -> [[T; MAX_DIM]; MAX_DIM] {
        let z = T::zero();
        let mut g = [[z; MAX_DIM]; MAX_DIM];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = z;
                for k in 0..dim {
                    s += self.inv[i][k] * self.inv[j][k];
                }
                g[i][j] = s * self.det.abs();
            }
        }
        g
    }
}

/// Tensor NURBS map with its own control net.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricMap<T> {
    basis: TensorBasis<T>,
    net: ControlNet<T>,
}

impl<T: Real> GeometricMap<T> {
    pub fn new(basis: TensorBasis<T>, net: ControlNet<T>) -> Result<Self> {
        if basis.num_basis() != net.len() {
            return Err(Error::Dimension(format!(
                "basis has {} functions but net has {} points",
                basis.num_basis(),
                net.len()
            )));
        }
        for kv in basis.directions() {
            if kv.first() != T::zero() || kv.last() != T::one() {
                return Err(Error::InvalidKnots("patch knot vectors must span [0, 1]".into()));
            }
        }
        Ok(Self { basis, net })
    }

    /// Identity map of `[0,1]^dim` with `elements` uniform spans per direction.
    pub fn identity(dim: usize, degree: usize, elements: usize) -> Self {
        let basis = TensorBasis::new(vec![KnotVector::uniform(degree, elements); dim]).expect("valid basis");
        let n = basis.num_basis();
        let points = (0..n)
            .map(|i| {
                let m = basis.multi_index(i);
                let mut p = [T::zero(); MAX_DIM];
                for d in 0..dim {
                    p[d] = basis.direction(d).greville(m[d]);
                }
                p
            })
            .collect();
        let net = ControlNet::new(points, vec![T::one(); n]).expect("valid net");
        Self { basis, net }
    }

    pub fn basis(&self) -> &TensorBasis<T> {
        &self.basis
    }

    pub fn net(&self) -> &ControlNet<T> {
        &self.net
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn weights(&self) -> &[T] {
        &self.net.weights
    }

    pub fn is_rational(&self) -> bool {
        self.net.weights.iter().any(|&w| w != T::one())
    }

    /// Same basis and weights, different control points.
    pub fn with_points(&self, points: Vec<Point<T>>) -> Result<Self> {
        Self::new(self.basis.clone(), ControlNet::new(points, self.net.weights.clone())?)
    }

    /// Rational basis `R_i = w_i B_i / Σ w B` and its parametric gradient,
    /// from the polynomial basis evaluation.
    pub fn rationalize(&self, b: &BasisEval<T>) -> BasisEval<T> {
        if !self.is_rational() {
            return b.clone();
        }
        let dim = self.dim();
        let w: Vec<T> = b.indices.iter().map(|&i| self.net.weights[i]).collect();
        let wsum: T = b.values.iter().zip(&w).map(|(&v, &wi)| v * wi).sum();
        let mut dw = [T::zero(); MAX_DIM];
        for (g, &wi) in b.grads.iter().zip(&w) {
            for d in 0..dim {
                dw[d] += g[d] * wi;
            }
        }
        let inv = T::one() / wsum;
        let mut out = b.clone();
        for k in 0..b.indices.len() {
            let r = w[k] * b.values[k] * inv;
            out.values[k] = r;
            for d in 0..dim {
                out.grads[k][d] = w[k] * b.grads[k][d] * inv - r * dw[d] * inv;
            }
        }
        out
    }

    /// Rational analysis basis at `xi`.
    pub fn rational_basis(&self, xi: &[T]) -> Result<BasisEval<T>> {
        self.check_domain(xi)?;
        Ok(self.rationalize(&self.basis.eval(xi)?))
    }

    fn check_domain(&self, xi: &[T]) -> Result<()> {
        if xi.len() < self.dim() {
            return Err(Error::Dimension("parametric point has too few coordinates".into()));
        }
        if xi[..self.dim()].iter().any(|&x| !(x >= T::zero() && x <= T::one())) {
            return Err(Error::Domain(format!("parametric point {xi:?} outside [0,1]^d")));
        }
        Ok(())
    }

    pub fn eval(&self, xi: &[T]) -> Result<Point<T>> {
        self.eval_with_points(xi, &self.net.points)
    }

    pub fn eval_with_points(&self, xi: &[T], points: &[Point<T>]) -> Result<Point<T>> {
        let r = self.rational_basis(xi)?;
        Ok(point_from_basis(&r, points, self.dim()))
    }

    pub fn jacobian(&self, xi: &[T]) -> Result<Jacobian<T>> {
        self.jacobian_with_points(xi, &self.net.points, &[])
    }

    /// Jacobian using `points`; `mu` is only used to annotate errors.
    pub fn jacobian_with_points(&self, xi: &[T], points: &[Point<T>], mu: &[T]) -> Result<Jacobian<T>> {
        let r = self.rational_basis(xi)?;
        let df = jacobian_from_basis(&r, points, self.dim());
        Jacobian::from_df(df, self.dim()).map_err(|det| Error::SingularGeometry {
            det: det.as_f64(),
            xi: xi.iter().map(|x| x.as_f64()).collect(),
            mu: mu.iter().map(|x| x.as_f64()).collect(),
        })
    }

    /// Same geometry with the parametrization reversed along `direction`.
    pub fn reversed(&self, direction: usize) -> Self {
        let shape = self.basis.shape();
        let mut dirs = self.basis.directions().to_vec();
        dirs[direction] = dirs[direction].reversed();
        let basis = TensorBasis::new(dirs).expect("same degrees");
        let n = self.net.len();
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut m = self.basis.multi_index(i);
            m[direction] = shape[direction] - 1 - m[direction];
            let src = self.basis.linear_index(&m[..self.dim()]);
            points.push(self.net.points[src]);
            weights.push(self.net.weights[src]);
        }
        Self {
            basis,
            net: ControlNet { points, weights },
        }
    }

    /// Refines along `direction` without changing the geometry
    /// (insertion in homogeneous coordinates).
    pub fn insert_knots(&self, direction: usize, knots: &[T]) -> Result<Self> {
        let (basis, rows) = self.basis.insert_knots(direction, knots, &self.homogeneous_rows(&[]))?;
        let (net, _) = split_homogeneous(&rows, 0);
        Self::new(basis, net)
    }

    /// Rows `[w P, w, w D_1, w D_2, ...]` per control point, where `D_k` are
    /// extra per-point vector fields carried along through refinement.
    pub fn homogeneous_rows(&self, fields: &[&[Point<T>]]) -> Vec<Vec<T>> {
        (0..self.net.len())
            .map(|i| {
                let w = self.net.weights[i];
                let mut row = Vec::with_capacity(MAX_DIM + 1 + MAX_DIM * fields.len());
                row.extend(self.net.points[i].iter().map(|&x| w * x));
                row.push(w);
                for f in fields {
                    row.extend(f[i].iter().map(|&x| w * x));
                }
                row
            })
            .collect()
    }
}

/// Inverse of [`GeometricMap::homogeneous_rows`]: returns the control net and
/// `n_fields` refined vector fields.
pub fn split_homogeneous<T: Real>(rows: &[Vec<T>], n_fields: usize) -> (ControlNet<T>, Vec<Vec<Point<T>>>) {
    let mut points = Vec::with_capacity(rows.len());
    let mut weights = Vec::with_capacity(rows.len());
    let mut fields = vec![Vec::with_capacity(rows.len()); n_fields];
    for row in rows {
        let w = row[MAX_DIM];
        let mut p = [T::zero(); MAX_DIM];
        for d in 0..MAX_DIM {
            p[d] = row[d] / w;
        }
        points.push(p);
        weights.push(w);
        for (f, field) in fields.iter_mut().enumerate() {
            let base = MAX_DIM + 1 + f * MAX_DIM;
            let mut v = [T::zero(); MAX_DIM];
            for d in 0..MAX_DIM {
                v[d] = row[base + d] / w;
            }
            field.push(v);
        }
    }
    (ControlNet { points, weights }, fields)
}

pub fn point_from_basis<T: Real>(r: &BasisEval<T>, points: &[Point<T>], dim: usize) -> Point<T> {
    let mut x = [T::zero(); MAX_DIM];
    for (&i, &v) in r.indices.iter().zip(&r.values) {
        for d in 0..dim {
            x[d] += v * points[i][d];
        }
    }
    x
}

pub fn jacobian_from_basis<T: Real>(r: &BasisEval<T>, points: &[Point<T>], dim: usize) -> [[T; MAX_DIM]; MAX_DIM] {
    let mut df = [[T::zero(); MAX_DIM]; MAX_DIM];
    for (&i, g) in r.indices.iter().zip(&r.grads) {
        for a in 0..dim {
            for b in 0..dim {
                df[a][b] += points[i][a] * g[b];
            }
        }
    }
    df
}
