//! Full-order isogeometric Galerkin solver, assembled on the parametric
//! domain through the pulled-back coefficients.

pub mod assembly;
pub mod field;
pub mod quadrature;
pub mod solver;
pub mod source;
pub mod trace;

pub use assembly::{FomAssembler, PatchAssembler, SymTensor};
pub use field::{eval_field, l2_error, sample_field, write_field, PatchField};
pub use quadrature::{ElementQuadrature, PatchQuadrature, QpGeometry, QuadPoint};
pub use solver::{Fom, FomSolution, FomSystem};
pub use source::Source;
pub use trace::port_mass;
