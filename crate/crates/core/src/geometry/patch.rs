use std::fmt;

use crate::splines::{GeometricMap, Point, TensorBasis, MAX_DIM};
use crate::splines::map::split_homogeneous;
use crate::{Error, Real, Result};

/// Boundary face `ξ_direction = side` of the parametric cube.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    pub direction: usize,
    /// `0` for `ξ = 0`, `1` for `ξ = 1`.
    pub side: usize,
}

impl Face {
    pub fn new(direction: usize, side: usize) -> Self {
        assert!(direction < MAX_DIM && side < 2, "invalid face");
        Self { direction, side }
    }

    pub fn id(self) -> usize {
        2 * self.direction + self.side
    }

    pub fn from_id(id: usize) -> Self {
        Self::new(id / 2, id % 2)
    }

    pub fn all(dim: usize) -> impl Iterator<Item = Face> {
        (0..2 * dim).map(Face::from_id)
    }

    /// Directions spanning the face, in ascending order.
    pub fn tangential(self, dim: usize) -> Vec<usize> {
        (0..dim).filter(|&d| d != self.direction).collect()
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "xi{}={}", self.direction + 1, self.side)
    }
}

/// Control-point indices on `face`, lexicographic in the tangential
/// directions (first tangential direction fastest).
pub fn face_indices<T: Real>(basis: &TensorBasis<T>, face: Face) -> Vec<usize> {
    let dim = basis.dim();
    let shape = basis.shape();
    let tang = face.tangential(dim);
    let fixed = if face.side == 0 { 0 } else { shape[face.direction] - 1 };
    let count: usize = tang.iter().map(|&d| shape[d]).product();
    (0..count)
        .map(|mut q| {
            let mut m = [0usize; MAX_DIM];
            m[face.direction] = fixed;
            for &d in &tang {
                m[d] = q % shape[d];
                q /= shape[d];
            }
            basis.linear_index(&m[..dim])
        })
        .collect()
}

pub fn face_shape<T: Real>(basis: &TensorBasis<T>, face: Face) -> Vec<usize> {
    let shape = basis.shape();
    face.tangential(basis.dim()).iter().map(|&d| shape[d]).collect()
}

/// A NURBS patch whose control points move affinely with its local
/// parameters: `P_i(μ) = P_i⁰ + Σ_j μ_j d_{i,j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterizedPatch<T> {
    map: GeometricMap<T>,
    displacements: Vec<Vec<Point<T>>>,
    dirichlet: Vec<Face>,
}

impl<T: Real> ParameterizedPatch<T> {
    /// `displacements[j][i]` is the direction of control point `i` for local
    /// parameter `j`.
    pub fn new(map: GeometricMap<T>, displacements: Vec<Vec<Point<T>>>, dirichlet: Vec<Face>) -> Result<Self> {
        let n = map.net().len();
        if let Some(j) = displacements.iter().position(|d| d.len() != n) {
            return Err(Error::Dimension(format!(
                "displacement table {j} has {} entries, patch has {n} control points",
                displacements[j].len()
            )));
        }
        if let Some(f) = dirichlet.iter().find(|f| f.direction >= map.dim()) {
            return Err(Error::Dimension(format!("face {f} does not exist in dimension {}", map.dim())));
        }
        let mut dirichlet = dirichlet;
        dirichlet.sort();
        dirichlet.dedup();
        Ok(Self { map, displacements, dirichlet })
    }

    /// Patch without parameters.
    pub fn fixed(map: GeometricMap<T>, dirichlet: Vec<Face>) -> Result<Self> {
        Self::new(map, Vec::new(), dirichlet)
    }

    pub fn map(&self) -> &GeometricMap<T> {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn num_dofs(&self) -> usize {
        self.map.net().len()
    }

    pub fn n_params(&self) -> usize {
        self.displacements.len()
    }

    pub fn displacements(&self) -> &[Vec<Point<T>>] {
        &self.displacements
    }

    pub fn dirichlet_faces(&self) -> &[Face] {
        &self.dirichlet
    }

    pub fn base_points(&self) -> &[Point<T>] {
        &self.map.net().points
    }

    /// Control points at local parameters `mu`.
    pub fn points(&self, mu: &[T]) -> Vec<Point<T>> {
        assert_eq!(mu.len(), self.n_params(), "local parameter count");
        let mut pts = self.map.net().points.clone();
        for (d, &m) in self.displacements.iter().zip(mu) {
            if m == T::zero() {
                continue;
            }
            for (p, v) in pts.iter_mut().zip(d) {
                for c in 0..MAX_DIM {
                    p[c] += m * v[c];
                }
            }
        }
        pts
    }

    pub fn instantiate(&self, mu: &[T]) -> Result<GeometricMap<T>> {
        self.map.with_points(self.points(mu))
    }

    /// Knot insertion applied to the base net and to every displacement
    /// table, so that refinement commutes with instantiation.
    pub fn insert_knots(&self, direction: usize, knots: &[T]) -> Result<Self> {
        let fields: Vec<&[Point<T>]> = self.displacements.iter().map(Vec::as_slice).collect();
        let rows = self.map.homogeneous_rows(&fields);
        let (basis, rows) = self.map.basis().insert_knots(direction, knots, &rows)?;
        let (net, displacements) = split_homogeneous(&rows, fields.len());
        Ok(Self {
            map: GeometricMap::new(basis, net)?,
            displacements,
            dirichlet: self.dirichlet.clone(),
        })
    }

    /// Inserts the same knots in every direction.
    pub fn refine_uniform(&self, knots: &[T]) -> Result<Self> {
        let mut out = self.clone();
        for d in 0..self.dim() {
            out = out.insert_knots(d, knots)?;
        }
        Ok(out)
    }

    /// Same patch with its parametrization reversed along `direction`
    /// (faces are relabelled accordingly).
    pub fn reversed(&self, direction: usize) -> Self {
        let map = self.map.reversed(direction);
        let basis = self.map.basis();
        let shape = basis.shape();
        let permute = |field: &[Point<T>]| -> Vec<Point<T>> {
            (0..field.len())
                .map(|i| {
                    let mut m = basis.multi_index(i);
                    m[direction] = shape[direction] - 1 - m[direction];
                    field[basis.linear_index(&m[..basis.dim()])]
                })
                .collect()
        };
        let displacements = self.displacements.iter().map(|d| permute(d)).collect();
        let dirichlet = self
            .dirichlet
            .iter()
            .map(|&f| if f.direction == direction { Face::new(f.direction, 1 - f.side) } else { f })
            .collect();
        Self::new(map, displacements, dirichlet).expect("consistent")
    }

    pub(crate) fn snap_face(&mut self, indices: &[usize], points: &[Point<T>]) {
        let weights = self.map.weights().to_vec();
        let mut pts = self.map.net().points.clone();
        for (&i, p) in indices.iter().zip(points) {
            pts[i] = *p;
        }
        let net = crate::splines::ControlNet::new(pts, weights).expect("weights unchanged");
        self.map = GeometricMap::new(self.map.basis().clone(), net).expect("same basis");
    }
}
