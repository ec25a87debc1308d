use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_ramsey, FitResult, FrequencyWindow};
use crate::dynamics::{propagate_schrodinger, HamiltonianModel};
use crate::gates::geometric_phase;
use crate::atom::qubit_basis;
use crate::pulse::PulseSequence;
use crate::scenario::GateScenario;
use crate::{Error, Result, C64};

/// How the free precession between the two gates is treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RamseyMode {
    /// Four pulses in one propagation with the hyperfine term switched on throughout.
    #[default]
    FullDynamics,
    /// One extracted gate applied twice around an exact `e^{-iω_hf T}` precession.
    Composed,
}

/// Two identical gates separated by `T = T₀ + ΔT`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseySpec {
    pub gate: GateScenario,
    /// Base delay T₀ between pair centres, ps.
    pub base_delay: f64,
    /// ΔT values, ps.
    pub delays: Vec<f64>,
    pub mode: RamseyMode,
    /// Relative half-width of the frequency search around ω_hf/2π.
    pub search_fraction: f64,
}

impl Default for RamseySpec {
    fn default() -> Self {
        let mut gate = GateScenario::default();
        gate.theta2 = gate.theta1 + std::f64::consts::FRAC_PI_4;
        Self {
            gate,
            base_delay: 70.0,
            delays: (0..31).map(|k| 10.0 * k as f64).collect(),
            mode: RamseyMode::default(),
            search_fraction: 0.2,
        }
    }
}

impl RamseySpec {
    /// Per-gate rotation angle Θ.
    pub fn rotation_angle(&self) -> f64 {
        geometric_phase(self.gate.theta1, self.gate.theta2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamseyScan {
    pub delays: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl RamseyScan {
    pub fn visibility(&self) -> f64 {
        let max = self.probabilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.probabilities.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

fn qubit_vectors(model: &HamiltonianModel, m_f: f64) -> Result<Vec<DVector<C64>>> {
    qubit_basis(model.atom.nuclear_spin, m_f)?
        .iter()
        .map(|expansion| {
            let mut v = DVector::from_element(model.dim(), C64::new(0.0, 0.0));
            for (s, c) in expansion {
                let i = model
                    .index_of(s)
                    .ok_or_else(|| Error::param("qubit state missing from basis"))?;
                v[i] = C64::new(*c, 0.0);
            }
            Ok(v)
        })
        .collect()
}

/// Probability of `|1⟩` after `gate · precession(T₀ + ΔT) · gate` starting in `|0⟩`.
pub fn simulate_ramsey(spec: &RamseySpec) -> Result<RamseyScan> {
    if spec.delays.is_empty() {
        return Err(Error::param("no Ramsey delays"));
    }
    if spec.delays.iter().any(|&d| !(spec.base_delay + d >= 0.0)) {
        return Err(Error::param("Ramsey delays must give T ≥ 0"));
    }
    let omega = spec.gate.atom.hyperfine_splitting;
    let probabilities = match spec.mode {
        RamseyMode::Composed => {
            let gate = spec.gate.extract_gate()?;
            let u = gate.operator.0;
            if u.nrows() != 2 {
                return Err(Error::param("Ramsey sequence needs a two-state manifold"));
            }
            spec.delays
                .iter()
                .map(|&d| {
                    let t = spec.base_delay + d;
                    let free = DMatrix::from_diagonal(&DVector::from_vec(vec![
                        C64::new(1.0, 0.0),
                        C64::from_polar(1.0, -omega * t),
                    ]));
                    let total = &u * free * &u;
                    total[(1, 0)].norm_sqr()
                })
                .collect()
        }
        RamseyMode::FullDynamics => {
            let pair = spec.gate.sequence()?;
            let tau = pair.intra_pair_delay;
            let mut options = spec.gate.options;
            options.include_hyperfine_term = true;
            options.include_decay = false;
            spec.delays
                .par_iter()
                .map(|&d| {
                    let t = spec.base_delay + d;
                    let mut pulses = pair.pulses().to_vec();
                    pulses.extend(pair.pulses().iter().map(|p| p.clone().with_arrival_time(p.arrival_time + t)));
                    let seq = PulseSequence::new(pulses, tau, t)?;
                    let model = HamiltonianModel::for_manifold(&spec.gate.atom, &seq, spec.gate.m_f, options)?;
                    let q = qubit_vectors(&model, spec.gate.m_f)?;
                    if q.len() != 2 {
                        return Err(Error::param("Ramsey sequence needs a two-state manifold"));
                    }
                    let out = propagate_schrodinger(&model, &q[0], &spec.gate.propagation)?;
                    Ok(q[1].dotc(&out.state).norm_sqr())
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    Ok(RamseyScan {
        delays: spec.delays.clone(),
        probabilities,
    })
}

/// Fits a Ramsey scan; θ in the model is half the per-gate rotation angle.
pub fn fit_ramsey_scan(spec: &RamseySpec, scan: &RamseyScan) -> Result<FitResult> {
    let f0 = spec.gate.atom.hyperfine_splitting / std::f64::consts::TAU;
    fit_ramsey(
        &scan.delays,
        &scan.probabilities,
        spec.rotation_angle() / 2.0,
        FrequencyWindow::around(f0, spec.search_fraction),
    )
}
