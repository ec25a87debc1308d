//! Two-pulse gate scenarios: the parameter set that fidelity sweeps vary.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::atom::{default_rb87, AtomSpec};
use crate::dynamics::{
    pathway_phases, HamiltonianModel, ModelOptions, PathwayPhases, PropagationConfig,
};
use crate::gates::{
    extract_gate, geometric_phase, lindblad_gate_fidelity, mf_manifold_gate, GateOutcome,
    LindbladGate, QubitUnitary, DEFAULT_LEAKAGE_BOUND,
};
use crate::pulse::{
    ChirpedPulseSpec, PolarizationState, PulseSequence, SpectralWidthConvention, TimeDomainParams,
};
use crate::{thz_to_rad_per_ps, Error, Result};

/// Intra-pair delay τ, either absolute or relative to the pulse duration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayRule {
    /// τ in ps.
    Absolute(f64),
    /// τ = factor × Δt_p, recomputed whenever the spectrum changes.
    PulseDurations(f64),
}

/// Every knob of a two-pulse gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateScenario {
    pub atom: AtomSpec,
    /// Spectral width Δω, rad/ps, read in `width_convention`.
    pub spectral_width: f64,
    pub width_convention: SpectralWidthConvention,
    /// Spectral chirp c_p, ps².
    pub chirp: f64,
    /// Mean pulse area 𝒜 per circular component, rad.
    pub area: f64,
    pub delay: DelayRule,
    /// Area imbalance α: the pulses carry 𝒜(1 - α) and 𝒜(1 + α).
    pub imbalance: f64,
    /// Static detuning δΔ = ω_p - ω₀, rad/ps.
    pub detuning: f64,
    /// Extra carrier phase δφ of the second pulse, rad.
    pub phase_offset: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub ellipticity1: f64,
    pub ellipticity2: f64,
    pub m_f: f64,
    pub options: ModelOptions,
    pub propagation: PropagationConfig,
}

impl Default for GateScenario {
    /// Reference parameters: Δω = 2π×4 rad/ps, c_p = 0.072 ps², 𝒜 = 6π,
    /// τ = 4Δt_p, θ₂ - θ₁ = π/2 (a full X flip) on the clock qubit.
    fn default() -> Self {
        Self {
            atom: default_rb87(),
            spectral_width: thz_to_rad_per_ps(4.0),
            width_convention: SpectralWidthConvention::default(),
            chirp: 0.072,
            area: 6.0 * PI,
            delay: DelayRule::PulseDurations(4.0),
            imbalance: 0.0,
            detuning: 0.0,
            phase_offset: 0.0,
            theta1: 0.0,
            theta2: FRAC_PI_2,
            ellipticity1: 0.0,
            ellipticity2: 0.0,
            m_f: 0.0,
            options: ModelOptions::default(),
            propagation: PropagationConfig::default(),
        }
    }
}

impl GateScenario {
    /// Δω_p of the frequency-domain field (1/e half-width).
    pub fn half_width(&self) -> f64 {
        self.width_convention.to_half_width(self.spectral_width)
    }

    pub fn time_params(&self) -> Result<TimeDomainParams> {
        TimeDomainParams::from_spectrum(self.half_width(), self.chirp)
    }

    /// τ in ps.
    pub fn resolved_delay(&self) -> Result<f64> {
        let tau = match self.delay {
            DelayRule::Absolute(t) => t,
            DelayRule::PulseDurations(k) => k * self.time_params()?.duration,
        };
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::param(format!("intra-pair delay must be non-negative, got {tau}")));
        }
        Ok(tau)
    }

    pub fn validate(&self) -> Result<()> {
        self.atom.validate()?;
        self.propagation.validate()?;
        if !(self.area >= 0.0) {
            return Err(Error::param("pulse area must be non-negative"));
        }
        if !(-1.0..=1.0).contains(&self.imbalance) {
            return Err(Error::param(format!("imbalance {} outside [-1, 1]", self.imbalance)));
        }
        self.resolved_delay()?;
        Ok(())
    }

    /// Ideal gate `U_x̂(2(θ₂ - θ₁))` for the configured manifold.
    pub fn ideal_gate(&self) -> Result<QubitUnitary> {
        mf_manifold_gate(
            self.atom.nuclear_spin,
            self.m_f,
            geometric_phase(self.theta1, self.theta2),
        )
    }

    /// The two pulses, centred at ∓τ/2.
    pub fn sequence(&self) -> Result<PulseSequence> {
        self.validate()?;
        let carrier = self.atom.d1_frequency + self.detuning;
        let pulse = |theta: f64, eps: f64, area: f64| -> Result<ChirpedPulseSpec> {
            ChirpedPulseSpec::new(
                carrier,
                self.half_width(),
                self.chirp,
                PolarizationState::new(theta, eps)?,
                0.0,
                area,
            )
        };
        let first = pulse(self.theta1, self.ellipticity1, self.area * (1.0 - self.imbalance))?;
        let second = pulse(self.theta2, self.ellipticity2, self.area * (1.0 + self.imbalance))?
            .with_phase_offset(self.phase_offset);
        PulseSequence::pair(first, second, self.resolved_delay()?)
    }

    pub fn model(&self) -> Result<HamiltonianModel> {
        HamiltonianModel::for_manifold(&self.atom, &self.sequence()?, self.m_f, self.options)
    }

    /// Closed-system gate extraction (decay ignored).
    pub fn extract_gate(&self) -> Result<GateOutcome> {
        let mut closed = self.clone();
        closed.options.include_decay = false;
        extract_gate(
            &closed.model()?,
            self.m_f,
            &self.ideal_gate()?,
            &self.propagation,
            DEFAULT_LEAKAGE_BOUND,
        )
    }

    /// Four-state density-matrix fidelity; decay follows `options.include_decay`.
    pub fn lindblad_fidelity(&self) -> Result<LindbladGate> {
        lindblad_gate_fidelity(&self.model()?, self.m_f, &self.ideal_gate()?, &self.propagation)
    }

    /// Fidelity using Lindblad propagation when decay is on and the pure-state
    /// gate otherwise.
    pub fn fidelity(&self) -> Result<f64> {
        if self.options.include_decay {
            Ok(self.lindblad_fidelity()?.fidelity)
        } else {
            Ok(self.extract_gate()?.fidelity)
        }
    }

    /// Pathway phases of the two ground fine-structure states.
    pub fn pathway_phases(&self, threshold: f64) -> Result<PathwayPhases> {
        let mut closed = self.clone();
        closed.options.include_decay = false;
        pathway_phases(&closed.model()?, &self.propagation, threshold)
    }
}
