#![allow(dead_code)]

use igarom::geometry::{Face, MultipatchModel, ParameterSpace, ParameterizedPatch};
use igarom::splines::{ControlNet, GeometricMap, KnotVector, TensorBasis};

/// Identity-like map of `[x0, x0 + 1] × [0, 1]^(dim-1)`.
pub fn shifted_cube(dim: usize, x0: f64, degree: usize, elements: usize) -> GeometricMap<f64> {
    let m = GeometricMap::identity(dim, degree, elements);
    let pts = m.net().points.iter().map(|p| [p[0] + x0, p[1], p[2]]).collect();
    m.with_points(pts).unwrap()
}

pub fn segment(x0: f64, len: f64, degree: usize, elements: usize) -> GeometricMap<f64> {
    let basis = TensorBasis::new(vec![KnotVector::uniform(degree, elements)]).unwrap();
    let n = basis.num_basis();
    let pts = (0..n).map(|i| [x0 + len * basis.direction(0).greville(i), 0.0, 0.0]).collect();
    GeometricMap::new(basis, ControlNet::new(pts, vec![1.0; n]).unwrap()).unwrap()
}

/// Model with one dummy parameter that moves nothing.
pub fn static_model(maps: Vec<GeometricMap<f64>>, dirichlet: Vec<Vec<Face>>) -> MultipatchModel<f64> {
    let n = maps.len();
    let patches = maps
        .into_iter()
        .zip(dirichlet)
        .map(|(m, d)| {
            let zero = vec![vec![[0.0; 3]; m.net().len()]];
            ParameterizedPatch::new(m, zero, d).unwrap()
        })
        .collect();
    let params = ParameterSpace::new(vec![0.0], vec![1.0], vec![vec![0]; n]).unwrap();
    MultipatchModel::new(patches, params).unwrap()
}

pub fn all_faces(dim: usize) -> Vec<Face> {
    Face::all(dim).collect()
}
