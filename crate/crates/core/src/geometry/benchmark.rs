//! Curved multipatch benchmark: an annular sector `1 ≤ r ≤ 2`, split
//! angularly into a chain of patches and (in 3D) swept over `0 ≤ z ≤ 1`.
//!
//! The radial parameter runs inward so that the map is orientation
//! preserving. Each patch is a single cubic Bézier element per direction (the exact
//! rational-quadratic arc, degree elevated) carrying two parameters: the
//! first moves control point `(1,1,1)` radially, the second moves `(2,2,2)`
//! vertically (tangentially in 2D). Refinement to the requested element
//! count happens after the parameterization is defined.

use std::f64::consts::FRAC_PI_2;

use super::model::MultipatchModel;
use super::params::ParameterSpace;
use super::patch::{Face, ParameterizedPatch};
use crate::splines::{ControlNet, GeometricMap, KnotVector, Point, TensorBasis, MAX_DIM};
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    /// 2 or 3.
    pub dim: usize,
    pub patches: usize,
    /// Elements per patch along (angular, radial, vertical).
    pub elements: [usize; MAX_DIM],
    /// Parameters range over `[-bound, bound]`.
    pub bound: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            patches: 4,
            elements: [4, 4, 4],
            bound: 0.2,
        }
    }
}

/// Cubic rational Bézier control points and weights of the unit-circle arc
/// between angles `a` and `b`.
fn cubic_arc(a: f64, b: f64) -> [([f64; 2], f64); 4] {
    let half = 0.5 * (b - a);
    let w = half.cos();
    let m = 0.5 * (a + b);
    let p0 = [a.cos(), a.sin()];
    let p2 = [b.cos(), b.sin()];
    let p1 = [m.cos() / w, m.sin() / w];
    // Degree elevation in homogeneous coordinates.
    let h = |c0: f64, q: [f64; 2], wq: f64, c1: f64, r: [f64; 2], wr: f64| {
        let ww = c0 * wq + c1 * wr;
        ([(c0 * wq * q[0] + c1 * wr * r[0]) / ww, (c0 * wq * q[1] + c1 * wr * r[1]) / ww], ww)
    };
    [
        (p0, 1.0),
        h(1.0 / 3.0, p0, 1.0, 2.0 / 3.0, p1, w),
        h(2.0 / 3.0, p1, w, 1.0 / 3.0, p2, 1.0),
        (p2, 1.0),
    ]
}

fn coarse_patch<T: Real>(cfg: &BenchmarkConfig, k: usize) -> Result<ParameterizedPatch<T>> {
    let dim = cfg.dim;
    let step = FRAC_PI_2 / cfg.patches as f64;
    let arc = cubic_arc(k as f64 * step, (k + 1) as f64 * step);
    let basis = TensorBasis::new(vec![KnotVector::uniform(3, 1); dim])?;
    let n = basis.num_basis();
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let m = basis.multi_index(i);
        let (a, w) = arc[m[0]];
        let r = 2.0 - m[1] as f64 / 3.0;
        let mut p: Point<T> = [T::zero(); MAX_DIM];
        p[0] = T::lit(r * a[0]);
        p[1] = T::lit(r * a[1]);
        if dim == 3 {
            p[2] = T::lit(m[2] as f64 / 3.0);
        }
        points.push(p);
        weights.push(T::lit(w));
    }
    let map = GeometricMap::new(basis.clone(), ControlNet::new(points, weights)?)?;
    let corner = |c: usize| basis.linear_index(&[c; MAX_DIM][..dim]);
    let mut radial = vec![[T::zero(); MAX_DIM]; n];
    let mut second = vec![[T::zero(); MAX_DIM]; n];
    let (a1, _) = arc[1];
    let norm = (a1[0] * a1[0] + a1[1] * a1[1]).sqrt();
    radial[corner(1)] = [T::lit(a1[0] / norm), T::lit(a1[1] / norm), T::zero()];
    second[corner(2)] = if dim == 3 {
        [T::zero(), T::zero(), T::one()]
    } else {
        let (a2, _) = arc[2];
        let n2 = (a2[0] * a2[0] + a2[1] * a2[1]).sqrt();
        [T::lit(-a2[1] / n2), T::lit(a2[0] / n2), T::zero()]
    };
    let mut dirichlet: Vec<Face> = (1..dim).flat_map(|d| [Face::new(d, 0), Face::new(d, 1)]).collect();
    if k == 0 {
        dirichlet.push(Face::new(0, 0));
    }
    if k + 1 == cfg.patches {
        dirichlet.push(Face::new(0, 1));
    }
    ParameterizedPatch::new(map, vec![radial, second], dirichlet)
}

/// Interior knots `1/n, ..., (n-1)/n`.
pub fn uniform_knots<T: Real>(n: usize) -> Vec<T> {
    (1..n).map(|i| T::lit(i as f64 / n as f64)).collect()
}

pub fn benchmark_model<T: Real>(cfg: &BenchmarkConfig) -> Result<MultipatchModel<T>> {
    if !(2..=3).contains(&cfg.dim) {
        return Err(Error::Dimension("benchmark geometry exists in 2 or 3 dimensions".into()));
    }
    if cfg.patches == 0 || cfg.elements[..cfg.dim].iter().any(|&e| e == 0) {
        return Err(Error::Domain("benchmark needs at least one patch and one element per direction".into()));
    }
    let mut patches = Vec::with_capacity(cfg.patches);
    for k in 0..cfg.patches {
        let mut p = coarse_patch::<T>(cfg, k)?;
        for d in 0..cfg.dim {
            p = p.insert_knots(d, &uniform_knots::<T>(cfg.elements[d]))?;
        }
        patches.push(p);
    }
    let n = 2 * cfg.patches;
    let params = ParameterSpace::new(
        vec![T::lit(-cfg.bound); n],
        vec![T::lit(cfg.bound); n],
        (0..cfg.patches).map(|k| vec![2 * k, 2 * k + 1]).collect(),
    )?;
    MultipatchModel::new(patches, params)
}
