//! Hilbert-space plumbing: basis layouts, sparse operators, states and
//! measurement functionals.

mod layout;
pub mod measure;
mod operators;
mod sparse;
mod state;
mod subspace;

pub use layout::{qubit_index, BasisLabel, BasisLayout, Level};
pub use operators::{
    build_atomic, build_ladder, lowering, number, projector, raising, sigma_x, sigma_z,
};
pub use sparse::SparseOperator;
pub use state::{inner, norm, QuantumState};
pub use subspace::Subspace;
