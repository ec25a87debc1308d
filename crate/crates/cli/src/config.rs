//! Versioned JSON run configuration. Every physical key names its unit.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use berrygate::analysis::{RamseyMode, RamseySpec};
use berrygate::atom::AtomSpec;
use berrygate::dynamics::{ModelOptions, PropagationConfig};
use berrygate::pulse::SpectralWidthConvention;
use berrygate::scenario::{DelayRule, GateScenario};
use berrygate::sweeps::{Axis, Observable, Parameter, SweepSpec};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "berrygate/config/v1";

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default)]
    pub atom: AtomBlock,
    #[serde(default)]
    pub pulses: PulseBlock,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub propagation: PropagationBlock,
    #[serde(default)]
    pub rap: RapBlock,
    #[serde(default)]
    pub gate: GateBlock,
    #[serde(default)]
    pub ramsey: RamseyBlock,
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub fit: FitBlock,
}

/// Overrides of the ⁸⁷Rb defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomBlock {
    pub nuclear_spin: Option<f64>,
    /// ω₀/2π.
    pub d1_thz: Option<f64>,
    /// Δ_fs/2π.
    pub fine_structure_thz: Option<f64>,
    /// ω_hf/2π.
    pub hyperfine_ghz: Option<f64>,
    /// γ/2π of P½.
    pub linewidth_d1_mhz: Option<f64>,
    /// γ/2π of P³⁄₂.
    pub linewidth_d2_mhz: Option<f64>,
    pub d2_coupling_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseBlock {
    /// Δω/2π.
    pub spectral_width_thz: Option<f64>,
    pub width_convention: Option<SpectralWidthConvention>,
    pub chirp_ps2: Option<f64>,
    pub area_rad: Option<f64>,
    /// Area in units of π.
    pub area_pi: Option<f64>,
    pub delay_ps: Option<f64>,
    pub delay_pulse_durations: Option<f64>,
    pub imbalance: Option<f64>,
    pub detuning_rad_per_ps: Option<f64>,
    pub phase_offset_rad: Option<f64>,
    pub theta1_rad: Option<f64>,
    pub theta2_rad: Option<f64>,
    pub ellipticity1: Option<f64>,
    pub ellipticity2: Option<f64>,
    pub m_f: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationBlock {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_step_ps: Option<f64>,
    pub window_multiplier: Option<f64>,
    pub sample_interval_ps: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RapBlock {
    pub sample_interval_ps: f64,
}

impl Default for RapBlock {
    fn default() -> Self {
        Self { sample_interval_ps: 0.02 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateBlock {
    /// Also write Bloch-sphere paths of both pathways.
    pub bloch: bool,
    pub sample_interval_ps: f64,
}

impl Default for GateBlock {
    fn default() -> Self {
        Self {
            bloch: false,
            sample_interval_ps: 0.02,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyBlock {
    pub base_delay_ps: Option<f64>,
    pub delays_ps: Option<Vec<f64>>,
    pub mode: Option<RamseyMode>,
    pub search_fraction: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBlock {
    pub parameter: Parameter,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub name: String,
    pub axes: Vec<AxisBlock>,
    pub observable: Observable,
    #[serde(default = "yes")]
    pub decay: bool,
    pub fringe_points: Option<usize>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    /// θ in the Ramsey model (half the per-gate rotation angle).
    pub theta_rad: Option<f64>,
    /// Search window for f_R.
    pub window_ghz: Option<[f64; 2]>,
}

impl RunConfig {
    pub fn load(path: &Path) -> std::result::Result<Self, (u8, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| (4, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| (2, e.0))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| bad(format!("config schema error: {e}")))?;
        if cfg.schema != SCHEMA {
            return Err(bad(format!("config schema error: expected schema {SCHEMA:?}, got {:?}", cfg.schema)));
        }
        cfg.scenario()?;
        cfg.ramsey()?;
        cfg.sweep()?;
        Ok(cfg)
    }

    pub fn defaults() -> Self {
        Self {
            schema: SCHEMA.to_string(),
            ..Self::default()
        }
    }

    pub fn atom(&self) -> AtomSpec {
        let a = &self.atom;
        let mut atom = AtomSpec::default();
        let set = |slot: &mut f64, v: Option<f64>, scale: f64| {
            if let Some(v) = v {
                *slot = v * scale;
            }
        };
        set(&mut atom.nuclear_spin, a.nuclear_spin, 1.0);
        set(&mut atom.d1_frequency, a.d1_thz, TAU);
        set(&mut atom.fine_structure_splitting, a.fine_structure_thz, TAU);
        set(&mut atom.hyperfine_splitting, a.hyperfine_ghz, TAU * 1e-3);
        set(&mut atom.gamma_d1, a.linewidth_d1_mhz, TAU * 1e-6);
        set(&mut atom.gamma_d2, a.linewidth_d2_mhz, TAU * 1e-6);
        set(&mut atom.d2_coupling_ratio, a.d2_coupling_ratio, 1.0);
        atom
    }

    pub fn propagation(&self) -> PropagationConfig {
        let p = &self.propagation;
        let d = PropagationConfig::default();
        PropagationConfig {
            rel_tol: p.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: p.abs_tol.unwrap_or(d.abs_tol),
            max_step: p.max_step_ps.or(d.max_step),
            window_multiplier: p.window_multiplier.unwrap_or(d.window_multiplier),
            sample_interval: p.sample_interval_ps.or(d.sample_interval),
        }
    }

    /// The resolved, validated gate scenario.
    pub fn scenario(&self) -> Result<GateScenario> {
        let p = &self.pulses;
        let mut s = GateScenario {
            atom: self.atom(),
            options: self.model,
            propagation: self.propagation(),
            ..GateScenario::default()
        };
        if let Some(v) = p.spectral_width_thz {
            s.spectral_width = TAU * v;
        }
        if let Some(v) = p.width_convention {
            s.width_convention = v;
        }
        if let Some(v) = p.chirp_ps2 {
            s.chirp = v;
        }
        match (p.area_rad, p.area_pi) {
            (Some(_), Some(_)) => return Err(bad("give either area_rad or area_pi, not both")),
            (Some(v), None) => s.area = v,
            (None, Some(v)) => s.area = v * PI,
            (None, None) => {}
        }
        match (p.delay_ps, p.delay_pulse_durations) {
            (Some(_), Some(_)) => return Err(bad("give either delay_ps or delay_pulse_durations, not both")),
            (Some(v), None) => s.delay = DelayRule::Absolute(v),
            (None, Some(v)) => s.delay = DelayRule::PulseDurations(v),
            (None, None) => {}
        }
        let fields: [(&mut f64, Option<f64>); 8] = [
            (&mut s.imbalance, p.imbalance),
            (&mut s.detuning, p.detuning_rad_per_ps),
            (&mut s.phase_offset, p.phase_offset_rad),
            (&mut s.theta1, p.theta1_rad),
            (&mut s.theta2, p.theta2_rad),
            (&mut s.ellipticity1, p.ellipticity1),
            (&mut s.ellipticity2, p.ellipticity2),
            (&mut s.m_f, p.m_f),
        ];
        for (slot, v) in fields {
            if let Some(v) = v {
                *slot = v;
            }
        }
        s.validate().map_err(|e| bad(e.to_string()))?;
        s.sequence().map_err(|e| bad(e.to_string()))?;
        Ok(s)
    }

    pub fn ramsey(&self) -> Result<RamseySpec> {
        let r = &self.ramsey;
        let mut spec = RamseySpec {
            gate: self.scenario()?,
            ..RamseySpec::default()
        };
        if self.pulses.theta2_rad.is_none() {
            // two π/2 gates unless the angles are given
            spec.gate.theta2 = spec.gate.theta1 + PI / 4.0;
        }
        if let Some(v) = r.base_delay_ps {
            spec.base_delay = v;
        }
        if let Some(v) = &r.delays_ps {
            spec.delays = v.clone();
        }
        if let Some(v) = r.mode {
            spec.mode = v;
        }
        if let Some(v) = r.search_fraction {
            spec.search_fraction = v;
        }
        if spec.delays.is_empty() || spec.delays.iter().any(|d| !d.is_finite()) {
            return Err(bad("ramsey.delays_ps must be a nonempty list of finite values"));
        }
        Ok(spec)
    }

    pub fn sweep(&self) -> Result<Option<SweepSpec>> {
        let Some(b) = &self.sweep else { return Ok(None) };
        let axes = b
            .axes
            .iter()
            .map(|a| match (&a.values, a.start, a.stop, a.points) {
                (Some(v), None, None, None) => Ok(Axis::new(a.parameter, v.clone())),
                (None, Some(lo), Some(hi), Some(n)) if n > 0 => Ok(Axis::linspace(a.parameter, lo, hi, n)),
                _ => Err(bad(format!(
                    "axis {}: give either values or start/stop/points",
                    a.parameter.name()
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut spec = SweepSpec::new(b.name.clone(), self.scenario()?, axes, b.observable);
        spec.decay = b.decay;
        if let Some(n) = b.fringe_points {
            spec.fringe_points = n;
        }
        spec.validate().map_err(|e| bad(e.to_string()))?;
        Ok(Some(spec))
    }
}
