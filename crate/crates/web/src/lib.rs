//! Browser demo: a two-level RAP Bloch path, the polarization fringe and the
//! gate fidelity against pulse area, exported through wasm-bindgen.
//!
//! Every export returns a flat `Float64Array` of fixed-width records so the
//! page can plot it without a serialization layer.

use std::f64::consts::PI;

use berrygate::analysis::{bloch_trajectory, default_fringe_angles, simulate_fringe};
use berrygate::atom::{default_rb87, BasisState, Level};
use berrygate::dynamics::{propagate_schrodinger, HamiltonianModel, ModelOptions, PropagationConfig};
use berrygate::pulse::{ChirpedPulseSpec, PolarizationState, PulseSequence, SpectralWidthConvention};
use berrygate::scenario::GateScenario;
use berrygate::{thz_to_rad_per_ps, C64};
use nalgebra::DVector;
use wasm_bindgen::prelude::*;

const SAMPLE_INTERVAL: f64 = 0.02;
const MAX_POINTS: usize = 200;

/// Bloch path of `S½(m_J=-½) ↔ P½(m_J=+½)` driven by one chirped pulse, as
/// `[t, x, y, z]` records.
pub fn rap_path(width_thz: f64, chirp_ps2: f64, area_pi: f64) -> Result<Vec<f64>, String> {
    let atom = default_rb87();
    let half_width = SpectralWidthConvention::default().to_half_width(thz_to_rad_per_ps(width_thz));
    let pulse = ChirpedPulseSpec::new(
        atom.d1_frequency,
        half_width,
        chirp_ps2,
        PolarizationState::linear(0.0),
        0.0,
        area_pi * PI,
    )
    .map_err(|e| e.to_string())?;
    let seq = PulseSequence::single(pulse).map_err(|e| e.to_string())?;
    let ground = BasisState::from_twice(Level::S12, -1, 1, atom.two_i()).map_err(|e| e.to_string())?;
    let options = ModelOptions {
        include_p32: false,
        ..ModelOptions::default()
    };
    let model = HamiltonianModel::from_seeds(&atom, &seq, &[ground], options).map_err(|e| e.to_string())?;
    let g = model.index_of(&ground).ok_or("ground state missing from basis")?;
    let mut psi0 = DVector::from_element(model.dim(), C64::new(0.0, 0.0));
    psi0[g] = C64::new(1.0, 0.0);
    let cfg = PropagationConfig::default().with_samples(SAMPLE_INTERVAL);
    let out = propagate_schrodinger(&model, &psi0, &cfg).map_err(|e| e.to_string())?;
    let traj = out.trajectory.ok_or("no trajectory recorded")?;
    let path = bloch_trajectory(&traj, g, 1 - g).map_err(|e| e.to_string())?;
    Ok(path.points.iter().flat_map(|p| [p.t, p.x, p.y, p.z]).collect())
}

/// Transfer probability `|M₁₀|²` against θ₂ - θ₁ over [0, π], as `[θ, P]` records.
pub fn fringe(area_pi: f64, ellipticity: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be between 2 and {MAX_POINTS}"));
    }
    let base = GateScenario {
        area: area_pi * PI,
        ellipticity1: ellipticity,
        ellipticity2: ellipticity,
        ..GateScenario::default()
    };
    let curve = simulate_fringe(&base, &default_fringe_angles(points)).map_err(|e| e.to_string())?;
    Ok(curve.into_iter().flat_map(|(t, p)| [t, p]).collect())
}

/// Closed-system gate fidelity against pulse area, as `[area/π, F]` records.
pub fn fidelity_curve(chirp_ps2: f64, area_lo_pi: f64, area_hi_pi: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be between 2 and {MAX_POINTS}"));
    }
    if !(area_lo_pi >= 0.0 && area_hi_pi > area_lo_pi) {
        return Err("area range must be non-negative and increasing".into());
    }
    let mut out = Vec::with_capacity(2 * points);
    for k in 0..points {
        let a = area_lo_pi + (area_hi_pi - area_lo_pi) * k as f64 / (points - 1) as f64;
        let s = GateScenario {
            chirp: chirp_ps2,
            area: a * PI,
            ..GateScenario::default()
        };
        let f = s.extract_gate().map_err(|e| e.to_string())?.fidelity;
        out.extend([a, f]);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = rapPath)]
pub fn rap_path_js(width_thz: f64, chirp_ps2: f64, area_pi: f64) -> Result<Vec<f64>, JsValue> {
    rap_path(width_thz, chirp_ps2, area_pi).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = fringe)]
pub fn fringe_js(area_pi: f64, ellipticity: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    fringe(area_pi, ellipticity, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = fidelityCurve)]
pub fn fidelity_curve_js(chirp_ps2: f64, area_lo_pi: f64, area_hi_pi: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    fidelity_curve(chirp_ps2, area_lo_pi, area_hi_pi, points).map_err(|e| JsValue::from_str(&e))
}
