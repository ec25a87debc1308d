use std::fs;
use std::path::Path;

use berrygate::analysis::{bloch_trajectory, fit_fringe, fit_ramsey, simulate_ramsey, FitResult, FrequencyWindow};
use berrygate::atom::{BasisState, Level};
use berrygate::dynamics::{adiabaticity, manifold_ground_states, propagate_schrodinger, HamiltonianModel};
use berrygate::pulse::PulseSequence;
use berrygate::sweeps::{preset, run_sweep, run_sweep_with_workers, write_named, DEFAULT_GRID};
use berrygate::{Error, C64};
use clap::ValueEnum;
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::{Command, Common, Switch};

pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_IO: u8 = 4;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter(_) | Error::Json(_) => EXIT_CONFIG,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_NUMERICAL,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure { code: EXIT_CONFIG, message: e.0 }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

type Outcome = std::result::Result<(), Failure>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    Fringe,
    Ramsey,
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Rap(c) => rap(&c),
        Command::Gate(c) => gate(&c),
        Command::Ramsey(c) => ramsey(&c),
        Command::Sweep {
            common,
            preset,
            grid,
            workers,
        } => sweep(&common, preset.as_deref(), grid, workers),
        Command::Fit {
            data,
            model,
            config,
            out,
        } => fit(&data, model, config.as_deref(), out.as_deref()),
    }
}

fn load(common: &Common) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(|(code, message)| Failure { code, message })?,
        None => RunConfig::defaults(),
    };
    if let Some(d) = common.decay {
        cfg.model.include_decay = d == Switch::On;
    }
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_failure(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_failure(path, e))
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// The P½ state reached from `g` by the circular component that raises or
/// lowers m_J through the other sign.
fn partner(g: &BasisState, two_i: i32) -> Result<BasisState, Error> {
    BasisState::from_twice(Level::P12, -g.two_mj, g.two_mi, two_i)
}

fn rap(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let s = cfg.scenario()?;
    let pulse = s.sequence()?.pulses()[0].clone().with_arrival_time(0.0);
    if common.dry_run {
        print_json(&json!({ "scenario": s, "pulse": pulse }));
        return Ok(());
    }
    prepare_out(&common.out)?;
    let mut options = s.options;
    options.include_decay = false;
    let seq = PulseSequence::single(pulse.clone())?;
    let model = HamiltonianModel::for_manifold(&s.atom, &seq, s.m_f, options)?;
    let config = s.propagation.clone().with_samples(cfg.rap.sample_interval_ps);
    let two_i = (2.0 * s.atom.nuclear_spin).round() as i32;
    let mut pathways = Vec::new();
    for (k, g) in manifold_ground_states(&s.atom, s.m_f)?.iter().enumerate() {
        let mut psi = DVector::from_element(model.dim(), C64::new(0.0, 0.0));
        let gi = model.index_of(g).ok_or_else(|| Error::Parameter("seed missing from basis".into()))?;
        psi[gi] = C64::new(1.0, 0.0);
        let out = propagate_schrodinger(&model, &psi, &config)?;
        let excited: f64 = model
            .basis()
            .iter()
            .zip(out.state.iter())
            .filter(|(b, _)| b.level.is_excited())
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let e = partner(g, two_i)?;
        let target = model.index_of(&e).map(|i| out.state[i]);
        if let Some(traj) = &out.trajectory {
            let path = common.out.join(format!("rap_trajectory_{k}.csv"));
            traj.save_csv(&path).map_err(|err| io_failure(&path, err))?;
        }
        pathways.push(json!({
            "ground": g.label(),
            "excited": e.label(),
            "transfer": excited,
            "target_population": target.map(|a| a.norm_sqr()),
            "target_phase_rad": target.map(|a| a.arg()),
            "ground_return": out.state[gi].norm_sqr(),
        }));
    }
    let params = pulse.time_params()?;
    let peak = berrygate::pulse::peak_rabi(pulse.area, params.duration)?;
    let span = s.propagation.window_multiplier * params.duration;
    let eta_max = (0..=2000)
        .map(|k| adiabaticity(&params, peak, -span + 2.0 * span * k as f64 / 2000.0))
        .fold(0.0, f64::max);
    let transfer = pathways.iter().filter_map(|p| p["transfer"].as_f64()).fold(f64::INFINITY, f64::min);
    let summary = json!({
        "transfer": transfer,
        "adiabaticity_max": finite(eta_max),
        "pulse_duration_ps": params.duration,
        "chirp_rate_rad_per_ps2": params.chirp_rate,
        "peak_rabi_rad_per_ps": peak,
        "pathways": pathways,
        "code_version": env!("CARGO_PKG_VERSION"),
    });
    write_json(&common.out.join("rap_summary.json"), &summary)?;
    print_json(&summary);
    Ok(())
}

fn gate(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let s = cfg.scenario()?;
    if common.dry_run {
        print_json(&json!({ "scenario": s, "ideal": s.ideal_gate()? }));
        return Ok(());
    }
    prepare_out(&common.out)?;
    let outcome = s.extract_gate()?;
    let lindblad = if s.options.include_decay { Some(s.lindblad_fidelity()?) } else { None };
    let mut bloch_files = Vec::new();
    if cfg.gate.bloch {
        let mut closed = s.clone();
        closed.options.include_decay = false;
        let model = closed.model()?;
        let config = s.propagation.clone().with_samples(cfg.gate.sample_interval_ps);
        let two_i = (2.0 * s.atom.nuclear_spin).round() as i32;
        for (k, g) in manifold_ground_states(&s.atom, s.m_f)?.into_iter().enumerate() {
            let gi = model.index_of(&g).ok_or_else(|| Error::Parameter("seed missing from basis".into()))?;
            let Some(ei) = model.index_of(&partner(&g, two_i)?) else { continue };
            let mut psi = DVector::from_element(model.dim(), C64::new(0.0, 0.0));
            psi[gi] = C64::new(1.0, 0.0);
            let out = propagate_schrodinger(&model, &psi, &config)?;
            let path = bloch_trajectory(out.trajectory.as_ref().expect("samples requested"), gi, ei)?;
            let file = common.out.join(format!("bloch_{k}.csv"));
            write_bloch(&file, &path)?;
            bloch_files.push(json!({ "file": file, "ground": g.label(), "flagged": path.flagged, "min_captured": path.min_captured }));
        }
    }
    let report = json!({
        "scenario": s,
        "ideal": s.ideal_gate()?,
        "outcome": outcome,
        "lindblad": lindblad,
        "bloch": bloch_files,
        "code_version": env!("CARGO_PKG_VERSION"),
    });
    write_json(&common.out.join("gate.json"), &report)?;
    print_json(&json!({
        "fidelity": outcome.fidelity,
        "lindblad_fidelity": lindblad.as_ref().map(|l| l.fidelity),
        "leakage": outcome.leakage,
        "rotation_angle_rad": outcome.rotation_angle,
        "rotation_axis": outcome.rotation_axis,
        "flagged": outcome.flagged,
    }));
    Ok(())
}

fn write_bloch(path: &Path, bloch: &berrygate::analysis::BlochPath) -> Outcome {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    w.write_record(["t_ps", "x", "y", "z"]).map_err(|e| io_failure(path, e))?;
    for p in &bloch.points {
        w.write_record([p.t, p.x, p.y, p.z].map(|v| format!("{v:e}"))).map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

fn ramsey(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let spec = cfg.ramsey()?;
    if common.dry_run {
        print_json(&spec);
        return Ok(());
    }
    prepare_out(&common.out)?;
    let scan = simulate_ramsey(&spec)?;
    let path = common.out.join("ramsey.csv");
    write_xy(&path, "delta_t_ps", &scan.delays, &scan.probabilities)?;
    let f0 = spec.gate.atom.hyperfine_splitting / std::f64::consts::TAU;
    let window = match cfg.fit.window_ghz {
        Some([lo, hi]) => FrequencyWindow { min: lo * 1e-3, max: hi * 1e-3, points: 2001 },
        None => FrequencyWindow::around(f0, spec.search_fraction),
    };
    let theta = cfg.fit.theta_rad.unwrap_or(spec.rotation_angle() / 2.0);
    let fit_path = common.out.join("ramsey_fit.json");
    match fit_ramsey(&scan.delays, &scan.probabilities, theta, window) {
        Ok(fit) => {
            let report = json!({
                "fit": fit,
                "f_r_ghz": fit.estimates[1] * 1e3,
                "f_r_ci95_ghz": fit.ci95.as_ref().map(|c| c[1] * 1e3),
                "configured_ghz": f0 * 1e3,
                "visibility": scan.visibility(),
                "code_version": env!("CARGO_PKG_VERSION"),
            });
            write_json(&fit_path, &report)?;
            print_json(&report);
            Ok(())
        }
        Err(e) => {
            write_json(&fit_path, &json!({ "error": e.to_string(), "code": e.code() }))?;
            Err(e.into())
        }
    }
}

fn write_xy(path: &Path, x_name: &str, xs: &[f64], ys: &[f64]) -> Outcome {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    w.write_record([x_name, "probability"]).map_err(|e| io_failure(path, e))?;
    for (x, y) in xs.iter().zip(ys) {
        w.write_record([format!("{x:e}"), format!("{y:e}")]).map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

fn sweep(common: &Common, name: Option<&str>, grid: Option<usize>, workers: Option<usize>) -> Outcome {
    let cfg = load(common)?;
    let mut spec = match name {
        Some(n) => {
            let mut p = preset(n, grid.unwrap_or(DEFAULT_GRID))?;
            if common.config.is_some() {
                p.base = cfg.scenario()?;
            }
            p
        }
        None => cfg.sweep()?.ok_or_else(|| Failure {
            code: EXIT_CONFIG,
            message: "no sweep block in the config and no --preset given".into(),
        })?,
    };
    if let Some(d) = common.decay {
        spec.decay = d == Switch::On;
    }
    spec.validate()?;
    if common.dry_run {
        print_json(&json!({ "spec": spec, "points": spec.len(), "file_stem": spec.file_stem() }));
        return Ok(());
    }
    prepare_out(&common.out)?;
    let result = match workers {
        Some(w) => run_sweep_with_workers(&spec, w)?,
        None => run_sweep(&spec)?,
    };
    let (csv, json_path) = write_named(&result, &common.out)?;
    print_json(&json!({
        "csv": csv,
        "json": json_path,
        "points": result.values.len(),
        "failed": result.failures(),
    }));
    Ok(())
}

/// Reads a two-column CSV (header row, `#` comments allowed).
fn read_xy(path: &Path) -> std::result::Result<(Vec<f64>, Vec<f64>), Failure> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_failure(path, e))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_failure(path, e))?;
        let parse = |i: usize| -> std::result::Result<f64, Failure> {
            rec.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| Failure {
                code: EXIT_CONFIG,
                message: format!("{}: row {} column {} is not a number", path.display(), row + 1, i + 1),
            })
        };
        xs.push(parse(0)?);
        ys.push(parse(1)?);
    }
    if xs.is_empty() {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!("{}: no data rows", path.display()),
        });
    }
    Ok((xs, ys))
}

fn fit(data: &Path, model: FitModel, config: Option<&Path>, out: Option<&Path>) -> Outcome {
    let cfg = match config {
        Some(p) => RunConfig::load(p).map_err(|(code, message)| Failure { code, message })?,
        None => RunConfig::defaults(),
    };
    let (xs, ys) = read_xy(data)?;
    let result: FitResult = match model {
        FitModel::Fringe => fit_fringe(&xs, &ys)?,
        FitModel::Ramsey => {
            let atom = cfg.atom();
            let f0 = atom.hyperfine_splitting / std::f64::consts::TAU;
            let window = match cfg.fit.window_ghz {
                Some([lo, hi]) => FrequencyWindow { min: lo * 1e-3, max: hi * 1e-3, points: 2001 },
                None => FrequencyWindow::around(f0, 0.2),
            };
            fit_ramsey(&xs, &ys, cfg.fit.theta_rad.unwrap_or(std::f64::consts::FRAC_PI_4), window)?
        }
    };
    if let Some(p) = out {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            prepare_out(dir)?;
        }
        write_json(p, &result)?;
    }
    print_json(&result);
    Ok(())
}

