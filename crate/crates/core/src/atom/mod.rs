//! Alkali level structure, angular-momentum algebra and dipole coupling factors.

mod angular;
mod levels;

pub use angular::{cg_twice, clebsch_gordan, HalfInt};
pub use levels::{
    branching_ratio, default_rb87, dipole_factor, hyperfine_decomposition, qubit_basis,
    sigma_coupling,
    AtomSpec, BasisState, HyperfineState, Level,
};
pub(crate) use levels::decompose_twice;
