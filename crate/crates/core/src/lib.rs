//! Simulation toolkit for ultrafast Berry-phase gates on alkali clock-state qubits.
//!
//! A pair of linearly polarized, linearly chirped Gaussian pulses drives two
//! rapid adiabatic passages S½ → P½ → S½. The σ⁺ and σ⁻ pathways of the
//! ground fine-structure states pick up geometric phases set by the relative
//! polarization angle of the two pulses, which rotates the hyperfine qubit.
//!
//! Units: time in ps, angular frequency in rad/ps, ħ = 1.

pub mod analysis;
pub mod atom;
pub mod dynamics;
mod error;
pub mod gates;
pub mod pulse;
pub mod scenario;
pub mod sweeps;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;

/// Converts an ordinary frequency in THz into an angular frequency in rad/ps.
pub fn thz_to_rad_per_ps(thz: f64) -> f64 {
    std::f64::consts::TAU * thz
}

/// Converts an angular frequency in rad/ps into an ordinary frequency in GHz.
pub fn rad_per_ps_to_ghz(omega: f64) -> f64 {
    omega / std::f64::consts::TAU * 1e3
}
