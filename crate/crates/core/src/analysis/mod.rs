//! Curve fitting, fringe and Ramsey simulations, and Bloch-sphere paths.

mod bloch;
pub mod fit;
mod fringe;
mod ramsey;

pub use bloch::{bloch_trajectory, BlochPath, BlochPoint, CAPTURE_THRESHOLD};
pub use fit::{fit_fringe, fit_ramsey, FitResult, FrequencyWindow};
pub use fringe::{default_fringe_angles, fringe_shift_gradient, simulate_fringe, FringeGradient, FringeShift};
pub use ramsey::{fit_ramsey_scan, simulate_ramsey, RamseyMode, RamseyScan, RamseySpec};
