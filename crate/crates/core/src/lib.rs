//! Simulation and effective-theory toolkit for a ring of atom-cavity nodes
//! coupled through optical fibers.
//!
//! Each node holds one three-level atom (`g`, `e`, `r`) in a cavity; cavities
//! and fibers alternate around the ring. Far-detuned Raman drives let the
//! excited level and all photon modes be eliminated, leaving spin-spin
//! couplings between the `{g, e}` qubits. The crate computes those couplings,
//! builds the full and effective Hamiltonians, integrates both, and runs the
//! gate, spin-chain and cluster-state protocols on top.
//!
//! ```
//! use ringqed::{coupling_table, NetworkConfig};
//!
//! let config = NetworkConfig::three_node_example();
//! let chi = coupling_table(&config).unwrap().chi(1, 3);
//! assert!((chi.norm() - 8.238e-4).abs() < 1e-5);
//! ```

pub mod config;
pub mod dynamics;
pub mod effective;
mod error;
pub mod full;
pub mod hamiltonian;
pub mod parallel;
pub mod protocols;
pub mod space;

pub use num_complex::Complex64 as C64;

pub use config::{
    mode_spectrum, validate_config, Branch, Drive, ModeSpectrum, NetworkConfig, ValidationReport,
    HIERARCHY_THRESHOLD,
};
pub use dynamics::{
    compare_full_effective, decoherence_estimate, evolve, evolve_with, excitation_probabilities,
    IntegrationPlan, SimulationRecord,
};
pub use effective::{
    build_effective_ising, build_effective_pair, build_effective_parallel,
    build_effective_xy_chain, coupling_table, effective_hamiltonian, equalize_chain_rabi,
    raman_coefficients, CouplingTable, RamanCoefficientTable,
};
pub use error::{Error, Result};
pub use full::{
    build_h1, build_h2, build_nonlocal_transform, full_hamiltonian, full_hamiltonian_callback,
};
pub use hamiltonian::{Hamiltonian, TimeDependentHamiltonian};
pub use protocols::{
    protocol_cluster, protocol_entangle, protocol_parallel, protocol_transfer, protocol_xy_quench,
    ClusterOptions, ClusterSource, Coupling, GateKind, Model, RunOptions,
};
pub use space::{BasisLayout, Level, QuantumState, SparseOperator};
