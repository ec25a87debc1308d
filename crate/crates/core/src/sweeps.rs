//! Parameter sweeps over gate scenarios and the Fig.-style presets.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{default_fringe_angles, fit_fringe, simulate_fringe};
use crate::dynamics::DEFAULT_CYCLIC_THRESHOLD;
use crate::scenario::{DelayRule, GateScenario};
use crate::{thz_to_rad_per_ps, Error, Result};

/// Default number of points per axis.
pub const DEFAULT_GRID: usize = 41;

/// Parameters an axis can vary. Values carry the unit in the name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    /// Δω/2π in THz, read in the scenario's width convention.
    SpectralWidthThz,
    ChirpPs2,
    AreaRad,
    /// Absolute intra-pair delay τ.
    DelayPs,
    /// τ as a multiple of Δt_p.
    DelayPulseDurations,
    Imbalance,
    DetuningRadPerPs,
    PhaseOffsetRad,
    Theta1Rad,
    Theta2Rad,
    /// θ₂ - θ₁, keeping θ₁.
    RelativeAngleRad,
    /// Same ellipticity on both pulses.
    Ellipticity,
    Ellipticity1,
    Ellipticity2,
    MF,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::SpectralWidthThz => "spectral_width_thz",
            Parameter::ChirpPs2 => "chirp_ps2",
            Parameter::AreaRad => "area_rad",
            Parameter::DelayPs => "delay_ps",
            Parameter::DelayPulseDurations => "delay_pulse_durations",
            Parameter::Imbalance => "imbalance",
            Parameter::DetuningRadPerPs => "detuning_rad_per_ps",
            Parameter::PhaseOffsetRad => "phase_offset_rad",
            Parameter::Theta1Rad => "theta1_rad",
            Parameter::Theta2Rad => "theta2_rad",
            Parameter::RelativeAngleRad => "relative_angle_rad",
            Parameter::Ellipticity => "ellipticity",
            Parameter::Ellipticity1 => "ellipticity1",
            Parameter::Ellipticity2 => "ellipticity2",
            Parameter::MF => "m_f",
        }
    }

    pub fn apply(self, s: &mut GateScenario, v: f64) {
        match self {
            Parameter::SpectralWidthThz => s.spectral_width = thz_to_rad_per_ps(v),
            Parameter::ChirpPs2 => s.chirp = v,
            Parameter::AreaRad => s.area = v,
            Parameter::DelayPs => s.delay = DelayRule::Absolute(v),
            Parameter::DelayPulseDurations => s.delay = DelayRule::PulseDurations(v),
            Parameter::Imbalance => s.imbalance = v,
            Parameter::DetuningRadPerPs => s.detuning = v,
            Parameter::PhaseOffsetRad => s.phase_offset = v,
            Parameter::Theta1Rad => s.theta1 = v,
            Parameter::Theta2Rad => s.theta2 = v,
            Parameter::RelativeAngleRad => s.theta2 = s.theta1 + v,
            Parameter::Ellipticity => {
                s.ellipticity1 = v;
                s.ellipticity2 = v;
            }
            Parameter::Ellipticity1 => s.ellipticity1 = v,
            Parameter::Ellipticity2 => s.ellipticity2 = v,
            Parameter::MF => s.m_f = v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: Parameter,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(parameter: Parameter, values: Vec<f64>) -> Self {
        Self { parameter, values }
    }

    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(parameter: Parameter, lo: f64, hi: f64, n: usize) -> Self {
        let values = if n <= 1 {
            vec![lo]
        } else {
            (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
        };
        Self { parameter, values }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Fidelity,
    Infidelity,
    /// `|⟨1|U|0⟩|²` of the extracted gate.
    TransferProbability,
    /// φ₋ - φ₊ of the two pathways, wrapped to (-π, π].
    RelativePhase,
    /// Rotation angle of the nearest unitary.
    FittedTheta,
    /// Fringe shift from a simulated polarization fringe.
    FittedDeltaTheta,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Fidelity => "fidelity",
            Observable::Infidelity => "infidelity",
            Observable::TransferProbability => "transfer_probability",
            Observable::RelativePhase => "relative_phase",
            Observable::FittedTheta => "fitted_theta",
            Observable::FittedDeltaTheta => "fitted_delta_theta",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub base: GateScenario,
    /// One or two axes; the first varies slowest.
    pub axes: Vec<Axis>,
    pub observable: Observable,
    /// Lindblad propagation with spontaneous decay for fidelity observables.
    pub decay: bool,
    /// Relative angles per fringe for [`Observable::FittedDeltaTheta`].
    #[serde(default = "default_fringe_points")]
    pub fringe_points: usize,
}

fn default_fringe_points() -> usize {
    13
}

impl SweepSpec {
    pub fn new(name: impl Into<String>, base: GateScenario, axes: Vec<Axis>, observable: Observable) -> Self {
        Self {
            name: name.into(),
            base,
            axes,
            observable,
            decay: true,
            fringe_points: default_fringe_points(),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::param(format!("a sweep needs one or two axes, got {}", self.axes.len())));
        }
        for a in &self.axes {
            if a.values.is_empty() {
                return Err(Error::param(format!("axis {} has no values", a.parameter.name())));
            }
            if let Some(v) = a.values.iter().find(|v| !v.is_finite()) {
                return Err(Error::param(format!("axis {} has non-finite value {v}", a.parameter.name())));
            }
        }
        if self.axes.len() == 2 && self.axes[0].parameter == self.axes[1].parameter {
            return Err(Error::param("both axes vary the same parameter"));
        }
        if self.observable == Observable::FittedDeltaTheta && self.fringe_points < 6 {
            return Err(Error::param("fringe fits need at least 6 angles"));
        }
        self.base.validate()
    }

    /// Scenario at flat grid index `k` (row-major, first axis slowest).
    pub fn scenario_at(&self, k: usize) -> (Vec<f64>, GateScenario) {
        let shape = self.shape();
        let mut s = self.base.clone();
        s.options.include_decay = self.decay;
        let mut coords = vec![0.0; shape.len()];
        let mut rest = k;
        for (d, axis) in self.axes.iter().enumerate().rev() {
            let i = rest % shape[d];
            rest /= shape[d];
            coords[d] = axis.values[i];
        }
        for (axis, &v) in self.axes.iter().zip(&coords) {
            axis.parameter.apply(&mut s, v);
        }
        (coords, s)
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("sweep spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// `<name>_<hash>.csv`, with the hash shortened to 12 hex digits.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.name, &self.config_hash()[..12])
    }
}

pub fn evaluate(observable: Observable, s: &GateScenario, fringe_points: usize) -> Result<f64> {
    match observable {
        Observable::Fidelity => s.fidelity(),
        Observable::Infidelity => Ok(1.0 - s.fidelity()?),
        Observable::TransferProbability => {
            let g = s.extract_gate()?;
            if g.operator.0.nrows() != 2 {
                return Err(Error::param("transfer probability needs a two-state manifold"));
            }
            Ok(g.operator.0[(1, 0)].norm_sqr())
        }
        Observable::RelativePhase => Ok(s.pathway_phases(DEFAULT_CYCLIC_THRESHOLD)?.relative()),
        Observable::FittedTheta => Ok(s.extract_gate()?.rotation_angle),
        Observable::FittedDeltaTheta => {
            let samples = simulate_fringe(s, &default_fringe_angles(fringe_points))?;
            let (x, y): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
            Ok(fit_fringe(&x, &y)?.estimates[1])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub timestamp: String,
    pub code_version: String,
}

impl Provenance {
    pub fn for_spec(spec: &SweepSpec) -> Self {
        Self {
            config_hash: spec.config_hash(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub observable: Observable,
    pub decay: bool,
    pub axes: Vec<Axis>,
    /// Row-major over the axes, first axis slowest; `None` where the point failed.
    pub values: Vec<Option<f64>>,
    /// `"ok"` or `"error:<code>"` per point.
    pub status: Vec<String>,
    /// Error message per point, empty on success.
    pub messages: Vec<String>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn failures(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Value at grid index `(i, j)`; `j` is ignored for a one-axis sweep.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let shape = self.shape();
        let k = if shape.len() == 2 { i * shape[1] + j } else { i };
        self.values.get(k).copied().flatten()
    }

    /// Values along the first axis with the second axis fixed at `j`.
    pub fn curve(&self, j: usize) -> Vec<Option<f64>> {
        (0..self.axes[0].values.len()).map(|i| self.get(i, j)).collect()
    }
}

/// Runs every grid point on the global rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let outcomes: Vec<Result<f64>> = (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let (_, s) = spec.scenario_at(k);
            evaluate(spec.observable, &s, spec.fringe_points)
        })
        .collect();
    assemble(spec, outcomes)
}

/// Runs on a dedicated pool of `workers` threads; `1` runs serially.
pub fn run_sweep_with_workers(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    if workers == 0 {
        return Err(Error::param("worker count must be positive"));
    }
    if workers == 1 {
        spec.validate()?;
        let outcomes = (0..spec.len())
            .map(|k| {
                let (_, s) = spec.scenario_at(k);
                evaluate(spec.observable, &s, spec.fringe_points)
            })
            .collect();
        return assemble(spec, outcomes);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}

fn assemble(spec: &SweepSpec, outcomes: Vec<Result<f64>>) -> Result<SweepResult> {
    let total = outcomes.len();
    let mut values = Vec::with_capacity(total);
    let mut status = Vec::with_capacity(total);
    let mut messages = Vec::with_capacity(total);
    let mut first = None;
    for o in outcomes {
        match o {
            Ok(v) => {
                values.push(Some(v));
                status.push("ok".to_string());
                messages.push(String::new());
            }
            Err(e) => {
                if first.is_none() {
                    first = Some(e.to_string());
                }
                values.push(None);
                status.push(format!("error:{}", e.code()));
                messages.push(e.to_string());
            }
        }
    }
    let failed = values.iter().filter(|v| v.is_none()).count();
    if 2 * failed > total {
        return Err(Error::Sweep {
            failed,
            total,
            first: first.unwrap_or_default(),
        });
    }
    Ok(SweepResult {
        name: spec.name.clone(),
        observable: spec.observable,
        decay: spec.decay,
        axes: spec.axes.clone(),
        values,
        status,
        messages,
        provenance: Provenance::for_spec(spec),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Writes a result as long-format CSV (one row per grid point, `#` header
/// block with provenance) or as JSON mirroring [`SweepResult`].
pub fn write_result(result: &SweepResult, path: &Path, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Json => {
            fs::write(path, serde_json::to_vec_pretty(result)?)?;
        }
        OutputFormat::Csv => {
            let mut file = fs::File::create(path)?;
            writeln!(file, "# berrygate sweep")?;
            writeln!(file, "# name: {}", result.name)?;
            writeln!(file, "# observable: {}", result.observable.name())?;
            writeln!(file, "# decay: {}", if result.decay { "on" } else { "off" })?;
            writeln!(file, "# config_hash: {}", result.provenance.config_hash)?;
            writeln!(file, "# timestamp: {}", result.provenance.timestamp)?;
            writeln!(file, "# code_version: {}", result.provenance.code_version)?;
            let mut w = csv::Writer::from_writer(file);
            let mut header: Vec<&str> = result.axes.iter().map(|a| a.parameter.name()).collect();
            header.extend(["value", "status"]);
            w.write_record(&header).map_err(csv_error)?;
            let shape = result.shape();
            for k in 0..result.values.len() {
                let mut row = Vec::with_capacity(header.len());
                let mut rest = k;
                let mut idx = vec![0; shape.len()];
                for d in (0..shape.len()).rev() {
                    idx[d] = rest % shape[d];
                    rest /= shape[d];
                }
                for (d, &i) in idx.iter().enumerate() {
                    row.push(format_float(result.axes[d].values[i]));
                }
                row.push(result.values[k].map(format_float).unwrap_or_default());
                row.push(result.status[k].clone());
                w.write_record(&row).map_err(csv_error)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Writes `<out>/<name>_<hash>.csv` and the matching `.json`; returns both paths.
pub fn write_named(result: &SweepResult, out: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(out)?;
    let stem = format!("{}_{}", result.name, &result.provenance.config_hash[..12]);
    let csv = out.join(format!("{stem}.csv"));
    let json = out.join(format!("{stem}.json"));
    write_result(result, &csv, OutputFormat::Csv)?;
    write_result(result, &json, OutputFormat::Json)?;
    Ok((csv, json))
}

pub fn read_result_json(path: &Path) -> Result<SweepResult> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

fn format_float(v: f64) -> String {
    format!("{v:e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Preset names accepted by [`preset`].
pub const PRESETS: [&str; 4] = ["figS1a", "figS1b", "figS1c", "figS1d"];

/// Infidelity over spectral width Δω/2π ∈ [1, 8] THz and chirp c_p ∈ [0.01, 0.15] ps²,
/// τ = 4Δt_p recomputed per point.
pub fn preset_fig_s1a(grid: usize) -> SweepSpec {
    SweepSpec::new(
        "figS1a",
        GateScenario::default(),
        vec![
            Axis::linspace(Parameter::SpectralWidthThz, 1.0, 8.0, grid),
            Axis::linspace(Parameter::ChirpPs2, 0.01, 0.15, grid),
        ],
        Observable::Infidelity,
    )
}

/// Infidelity over 𝒜 ∈ [2π, 16π] for τ ∈ {18.2, 11, 3.8, 2.36} ps.
pub fn preset_fig_s1b(grid: usize) -> SweepSpec {
    SweepSpec::new(
        "figS1b",
        GateScenario::default(),
        vec![
            Axis::linspace(Parameter::AreaRad, 2.0 * PI, 16.0 * PI, grid),
            Axis::new(Parameter::DelayPs, vec![18.2, 11.0, 3.8, 2.36]),
        ],
        Observable::Infidelity,
    )
}

/// Infidelity over α ∈ [-1, 1] for 𝒜 ∈ {6π, 9π, 12π}.
pub fn preset_fig_s1c(grid: usize) -> SweepSpec {
    SweepSpec::new(
        "figS1c",
        GateScenario::default(),
        vec![
            Axis::linspace(Parameter::Imbalance, -1.0, 1.0, grid),
            Axis::new(Parameter::AreaRad, vec![6.0 * PI, 9.0 * PI, 12.0 * PI]),
        ],
        Observable::Infidelity,
    )
}

/// Fidelity over δΔ ∈ [-2π×4, 2π×4] rad/ps for δφ ∈ {0, π/2, π, 3π/2}.
pub fn preset_fig_s1d(grid: usize) -> SweepSpec {
    let span = thz_to_rad_per_ps(4.0);
    SweepSpec::new(
        "figS1d",
        GateScenario::default(),
        vec![
            Axis::linspace(Parameter::DetuningRadPerPs, -span, span, grid),
            Axis::new(Parameter::PhaseOffsetRad, vec![0.0, PI / 2.0, PI, 1.5 * PI]),
        ],
        Observable::Fidelity,
    )
}

/// Looks a preset up by name with `grid` points on each continuous axis.
pub fn preset(name: &str, grid: usize) -> Result<SweepSpec> {
    match name {
        "figS1a" => Ok(preset_fig_s1a(grid)),
        "figS1b" => Ok(preset_fig_s1b(grid)),
        "figS1c" => Ok(preset_fig_s1c(grid)),
        "figS1d" => Ok(preset_fig_s1d(grid)),
        _ => Err(Error::param(format!("unknown preset {name:?}; expected one of {PRESETS:?}"))),
    }
}
