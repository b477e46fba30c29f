use crate::numerics::gauss_rule;
use crate::splines::{GeometricMap, Jacobian, Point, MAX_DIM};
use crate::{Error, Real, Result};

/// Rational basis data at one quadrature point of an element.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadPoint<T> {
    pub xi: Point<T>,
    /// Parametric quadrature weight (includes the element volume).
    pub weight: T,
    pub values: Vec<T>,
    pub grads: Vec<Point<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElementQuadrature<T> {
    /// Patch-local indices of the functions supported on the element.
    pub dofs: Vec<usize>,
    pub points: Vec<QuadPoint<T>>,
}

/// Physical data at one quadrature point for a given control net.
#[derive(Clone, Debug, PartialEq)]
pub struct QpGeometry<T> {
    pub x: Point<T>,
    pub jac: Jacobian<T>,
}

/// Parameter-independent basis evaluations of one patch at `(p+1)^d` Gauss
/// points per element. The weights of the map do not depend on the
/// parameters, so these are reused for every instantiation.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchQuadrature<T> {
    dim: usize,
    elements: Vec<ElementQuadrature<T>>,
}

impl<T: Real> PatchQuadrature<T> {
    pub fn new(map: &GeometricMap<T>) -> Self {
        Self::with_points(map, map.basis().degree() + 1)
    }

    pub fn with_points(map: &GeometricMap<T>, q: usize) -> Self {
        let dim = map.dim();
        let rule = gauss_rule::<T>(q);
        let elements = map
            .basis()
            .elements()
            .into_iter()
            .map(|el| {
                let per_dir: Vec<Vec<(T, T)>> =
                    (0..dim).map(|d| rule.on_interval(el.lower[d], el.upper[d]).collect()).collect();
                let n: usize = per_dir.iter().map(Vec::len).product();
                let mut dofs = Vec::new();
                let points = (0..n)
                    .map(|mut q| {
                        let mut xi = [T::zero(); MAX_DIM];
                        let mut weight = T::one();
                        for d in 0..dim {
                            let (x, w) = per_dir[d][q % per_dir[d].len()];
                            q /= per_dir[d].len();
                            xi[d] = x;
                            weight *= w;
                        }
                        let b = map.rationalize(&map.basis().eval_on_spans(&el.spans, &xi));
                        if dofs.is_empty() {
                            dofs = b.indices.clone();
                        }
                        QuadPoint {
                            xi,
                            weight,
                            values: b.values,
                            grads: b.grads,
                        }
                    })
                    .collect();
                ElementQuadrature { dofs, points }
            })
            .collect();
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[ElementQuadrature<T>] {
        &self.elements
    }

    pub fn n_points(&self) -> usize {
        self.elements.iter().map(|e| e.points.len()).sum()
    }

    /// Physical point and Jacobian at one quadrature point.
    pub fn geometry_at(&self, e: usize, q: usize, points: &[Point<T>]) -> std::result::Result<QpGeometry<T>, T> {
        let el = &self.elements[e];
        let qp = &el.points[q];
        let mut x = [T::zero(); MAX_DIM];
        let mut df = [[T::zero(); MAX_DIM]; MAX_DIM];
        for (a, &i) in el.dofs.iter().enumerate() {
            let p = &points[i];
            for r in 0..self.dim {
                x[r] += qp.values[a] * p[r];
                for c in 0..self.dim {
                    df[r][c] += p[r] * qp.grads[a][c];
                }
            }
        }
        Jacobian::from_df(df, self.dim).map(|jac| QpGeometry { x, jac })
    }

    /// Geometry at every quadrature point (element-major order).
    pub fn geometry(&self, points: &[Point<T>], mu: &[T]) -> Result<Vec<Vec<QpGeometry<T>>>> {
        self.elements
            .iter()
            .enumerate()
            .map(|(e, el)| {
                (0..el.points.len())
                    .map(|q| {
                        self.geometry_at(e, q, points).map_err(|det| Error::SingularGeometry {
                            det: det.as_f64(),
                            xi: el.points[q].xi[..self.dim].iter().map(|x| x.as_f64()).collect(),
                            mu: mu.iter().map(|x| x.as_f64()).collect(),
                        })
                    })
                    .collect()
            })
            .collect()
    }
}
