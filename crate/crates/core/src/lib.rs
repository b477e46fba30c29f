//! Reduced-order modelling of parameterized Poisson problems on multipatch
//! NURBS geometries.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`] — quadrature, dense and sparse factorizations, SVD,
//!   Gram–Schmidt, Latin hypercube sampling;
//! * [`splines`] — B-spline/NURBS bases, geometric maps, knot insertion;
//! * [`geometry`] — parameterized multipatch models, ports, DOF numbering;
//! * [`fom`] — full-order isogeometric Galerkin solver;
//! * [`eim`] — empirical interpolation of the pulled-back coefficients;
//! * [`rb`] — reduced bases (Greedy, POD) and online reduced solves;
//! * [`scrbe`] — static condensation with reduced bubbles and port modes.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the type
//! aliases at the crate root fix the scalar to `f64`.

pub mod eim;
pub mod error;
pub mod fom;
pub mod geometry;
pub mod numerics;
pub mod rb;
pub mod scalar;
pub mod scrbe;
pub mod splines;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DenseMatrix = numerics::Mat<f64>;
pub type SparseMatrix = numerics::CsrMatrix<f64>;
pub type GeometricMap = splines::GeometricMap<f64>;
pub type MultipatchModel = geometry::MultipatchModel<f64>;
pub type ParameterSpace = geometry::ParameterSpace<f64>;
pub type Fom = fom::Fom<f64>;
pub type EimModel = eim::EimModel<f64>;
pub type ReducedSpace = rb::ReducedSpace<f64>;
pub type PortSpace = scrbe::PortSpace<f64>;
pub type ScrbeModel = scrbe::ScrbeModel<f64>;
