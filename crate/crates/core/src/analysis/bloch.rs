use serde::{Deserialize, Serialize};

use crate::dynamics::TrajectoryRecord;
use crate::{Error, Result};

/// Minimum population the selected pair must hold at every sample.
pub const CAPTURE_THRESHOLD: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPath {
    pub points: Vec<BlochPoint>,
    /// Smallest population held by the selected pair over the trajectory.
    pub min_captured: f64,
    /// The pair held less than [`CAPTURE_THRESHOLD`] somewhere.
    pub flagged: bool,
}

/// Bloch vector of the `(g, e)` pair at every sample:
/// `x = 2 Re ρ_ge`, `y = 2 Im ρ_ge`, `z = ρ_gg - ρ_ee`.
pub fn bloch_trajectory(traj: &TrajectoryRecord, ground: usize, excited: usize) -> Result<BlochPath> {
    let n = traj.dim();
    if ground >= n || excited >= n || ground == excited {
        return Err(Error::param("invalid two-level selection"));
    }
    let mut min_captured = f64::INFINITY;
    let points = (0..traj.times.len())
        .map(|k| {
            let rho_gg = traj.coherence(k, ground, ground).re;
            let rho_ee = traj.coherence(k, excited, excited).re;
            let rho_ge = traj.coherence(k, ground, excited);
            min_captured = min_captured.min(rho_gg + rho_ee);
            BlochPoint {
                t: traj.times[k],
                x: 2.0 * rho_ge.re,
                y: 2.0 * rho_ge.im,
                z: rho_gg - rho_ee,
            }
        })
        .collect();
    Ok(BlochPath {
        points,
        flagged: min_captured < CAPTURE_THRESHOLD,
        min_captured,
    })
}
