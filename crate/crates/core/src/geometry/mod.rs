//! Parameterized multipatch models: affine control-point parameterization,
//! interface (port) detection and glued C⁰ DOF numbering.

pub mod benchmark;
pub mod dofs;
pub mod model;
pub mod params;
pub mod patch;
pub mod ports;
pub mod validate;

pub use benchmark::{benchmark_model, BenchmarkConfig};
pub use dofs::DofMap;
pub use model::{ModelSummary, MultipatchModel, PortDofs};
pub use params::ParameterSpace;
pub use patch::{face_indices, face_shape, Face, ParameterizedPatch};
pub use ports::{detect_ports, LocalPort, Orientation, Port, PortTopology};
pub use validate::{validate_geometry, GeometryReport, InvalidSample};
