//! Static condensation with reduced bubbles and empirical port modes.

mod exact;
mod extension;
mod layout;
mod ports;
mod reduced;
mod schur;

pub use exact::{lift_port_modes, mode_index, ExactCondenser, PatchLiftings, ScrbeSolution};
pub use extension::{reference_laplacian, HarmonicExtender};
pub use layout::{layouts, PatchLayout, PortSlots};
pub use ports::{build_port_modes, full_port_spaces, port_modes_from_traces, port_traces, PortSpace};
pub use reduced::{
    train_scrbe, BubbleSpace, PatchBasis, PatchCoefficients, PatchRom, PatchTables, ScrbeModel, ScrbeOnline,
    ScrbeOptions,
};
pub use schur::{patch_contribution, ModeIndex, PatchContribution, SchurSystem};
