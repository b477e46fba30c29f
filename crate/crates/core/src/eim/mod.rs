//! Empirical interpolation of the pulled-back diffusion tensor and source
//! density, giving affine expansions of the full-order operator.

pub mod affine;
pub mod sampler;
pub mod store;
pub mod train;

pub use affine::{
    affine_operator, assemble_affine_terms, patch_train_set, train_eim_model, train_patch, AffineCoefficients,
    AffineOperator, EimModel, EimPatch, FnCoefficients, PatchAffineTerms,
};
pub use sampler::{n_components, sym_components, unflatten_sym, CoefficientKind, CoefficientSampler, MagicStencil, PatchSampler};
pub use store::SnapshotStore;
pub use train::{eim_error_curve, eim_error_report, eim_train, EimBasis, EimErrorReport, EimOptions, EimStop};
