//! B-spline and NURBS kernels: knot vectors, tensor bases, geometric maps,
//! knot insertion and the patch file format.

pub mod io;
pub mod knots;
pub mod map;
pub mod tensor;

pub use knots::KnotVector;
pub use map::{ControlNet, GeometricMap, Jacobian};
pub use tensor::{BasisEval, Element, Point, TensorBasis, MAX_DIM};
