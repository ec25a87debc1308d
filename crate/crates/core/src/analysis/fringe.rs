use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_fringe, FitResult};
use crate::scenario::GateScenario;
use crate::{Error, Result};

/// Probability of `|0⟩ → |1⟩` for each relative polarization angle `θ₂ - θ₁`.
pub fn simulate_fringe(base: &GateScenario, relative_angles: &[f64]) -> Result<Vec<(f64, f64)>> {
    relative_angles
        .par_iter()
        .map(|&theta| {
            let mut s = base.clone();
            s.theta2 = s.theta1 + theta;
            let gate = s.extract_gate()?;
            let m = &gate.operator.0;
            if m.nrows() != 2 {
                return Err(Error::param("fringe needs a two-state manifold"));
            }
            Ok((theta, m[(1, 0)].norm_sqr()))
        })
        .collect()
}

/// Evenly spaced relative angles covering `[0, π]`.
pub fn default_fringe_angles(points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|k| std::f64::consts::PI * k as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeShift {
    pub area: f64,
    pub delta_theta: f64,
    pub fit: FitResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeGradient {
    pub ellipticity: f64,
    /// dΔθ/d𝒜, rad per rad of area.
    pub slope: f64,
    pub intercept: f64,
    pub shifts: Vec<FringeShift>,
}

/// Fringe shift Δθ at each area for ellipticity `ε` on both pulses, and the
/// least-squares slope of Δθ against 𝒜.
pub fn fringe_shift_gradient(
    base: &GateScenario,
    ellipticity: f64,
    areas: &[f64],
    angles: &[f64],
) -> Result<FringeGradient> {
    if areas.len() < 3 {
        return Err(Error::param("need at least three pulse areas"));
    }
    let mut shifts = Vec::with_capacity(areas.len());
    for &area in areas {
        let mut s = base.clone();
        s.area = area;
        s.ellipticity1 = ellipticity;
        s.ellipticity2 = ellipticity;
        let samples = simulate_fringe(&s, angles)?;
        let (x, y): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        let fit = fit_fringe(&x, &y)?;
        if !fit.converged {
            return Err(Error::Fit(format!("fringe fit at area {area} did not converge")));
        }
        shifts.push(FringeShift {
            area,
            delta_theta: fit.estimates[1],
            fit,
        });
    }
    let n = shifts.len() as f64;
    let mx = shifts.iter().map(|s| s.area).sum::<f64>() / n;
    let my = shifts.iter().map(|s| s.delta_theta).sum::<f64>() / n;
    let sxy: f64 = shifts.iter().map(|s| (s.area - mx) * (s.delta_theta - my)).sum();
    let sxx: f64 = shifts.iter().map(|s| (s.area - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("pulse areas must not all be equal"));
    }
    let slope = sxy / sxx;
    Ok(FringeGradient {
        ellipticity,
        slope,
        intercept: my - slope * mx,
        shifts,
    })
}
