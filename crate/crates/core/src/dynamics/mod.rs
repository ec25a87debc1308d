//! Rotating-frame Hamiltonians, adaptive propagation and adiabatic diagnostics.

mod adiabatic;
mod hamiltonian;
pub mod integrator;
mod pathway;
mod propagate;
mod tableau;

pub use adiabatic::{adiabaticity, instantaneous_eigensystem, Eigensystem};
pub use hamiltonian::{
    build_hamiltonian, manifold_ground_states, Coupling, DecayChannel, HamiltonianModel,
    ModelOptions,
};
pub use pathway::{pathway_phases, wrap_pi, PathwayPhases, DEFAULT_CYCLIC_THRESHOLD};
pub use propagate::{
    propagate_lindblad, propagate_schrodinger, validate_density_matrix, LindbladOutcome,
    PropagationConfig, SchrodingerOutcome, SnapshotKind, TrajectoryRecord,
};
