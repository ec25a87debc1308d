//! Time evolution of state vectors and density matrices.
//!
//! Both propagators work in the interaction picture of the static diagonal
//! Hamiltonian, so that away from the pulses the state is stationary and the
//! adaptive stepper can take long steps. Results are transformed back to the
//! rotating frame before they are returned.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::hamiltonian::HamiltonianModel;
use super::integrator::{Dop853, IntegrationStats, StepControl};
use crate::pulse::{derive_time_params, integration_window, DEFAULT_WINDOW_MULTIPLIER};
use crate::{Error, Result, C64};

/// Integration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step, ps. `None` uses half of the shortest pulse duration.
    pub max_step: Option<f64>,
    /// Window half-width in units of the pulse duration.
    pub window_multiplier: f64,
    /// Spacing of recorded trajectory samples, ps. `None` records nothing.
    pub sample_interval: Option<f64>,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            window_multiplier: DEFAULT_WINDOW_MULTIPLIER,
            sample_interval: None,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::param("tolerances must be positive"));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::param("max_step must be positive"));
            }
        }
        if let Some(dt) = self.sample_interval {
            if !(dt > 0.0) {
                return Err(Error::param("sample_interval must be positive"));
            }
        }
        if !(self.window_multiplier > 0.0) {
            return Err(Error::param("window multiplier must be positive"));
        }
        Ok(())
    }

    pub fn with_samples(mut self, interval: f64) -> Self {
        self.sample_interval = Some(interval);
        self
    }
}

/// What each trajectory snapshot holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnapshotKind {
    Amplitudes,
    /// Row-major density matrix.
    DensityMatrix,
}

/// Sampled time evolution in the rotating frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub kind: SnapshotKind,
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<C64>>,
    /// ‖ψ‖ or tr ρ at each sample.
    pub norms: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Populations of every basis state at sample `k`.
    pub fn populations(&self, k: usize) -> Vec<f64> {
        let n = self.dim();
        let s = &self.snapshots[k];
        match self.kind {
            SnapshotKind::Amplitudes => s.iter().map(|a| a.norm_sqr()).collect(),
            SnapshotKind::DensityMatrix => (0..n).map(|i| s[i * n + i].re).collect(),
        }
    }

    /// Density-matrix element ρ_ij at sample `k`.
    pub fn coherence(&self, k: usize, i: usize, j: usize) -> C64 {
        let s = &self.snapshots[k];
        match self.kind {
            SnapshotKind::Amplitudes => s[i] * s[j].conj(),
            SnapshotKind::DensityMatrix => s[i * self.dim() + j],
        }
    }

    /// CSV with columns `t_ps, norm`, then `pop_<state>` for every state and,
    /// for pure-state trajectories, `re_<state>, im_<state>`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let mut header = vec!["t_ps".to_string(), "norm".to_string()];
        header.extend(self.labels.iter().map(|l| format!("pop_{l}")));
        if self.kind == SnapshotKind::Amplitudes {
            for l in &self.labels {
                header.push(format!("re_{l}"));
                header.push(format!("im_{l}"));
            }
        }
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.times.len() {
            let mut row = vec![format!("{:.6}", self.times[k]), format!("{:.12e}", self.norms[k])];
            row.extend(self.populations(k).iter().map(|p| format!("{p:.12e}")));
            if self.kind == SnapshotKind::Amplitudes {
                for a in &self.snapshots[k] {
                    row.push(format!("{:.12e}", a.re));
                    row.push(format!("{:.12e}", a.im));
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }
}

/// Final pure state plus diagnostics.
#[derive(Clone, Debug)]
pub struct SchrodingerOutcome {
    pub state: DVector<C64>,
    pub window: (f64, f64),
    pub trajectory: Option<TrajectoryRecord>,
    pub stats: IntegrationStats,
}

/// Final density matrix plus diagnostics.
#[derive(Clone, Debug)]
pub struct LindbladOutcome {
    pub state: DMatrix<C64>,
    pub window: (f64, f64),
    pub trajectory: Option<TrajectoryRecord>,
    pub stats: IntegrationStats,
}

/// Off-diagonal element of the coupling operator in the interaction picture.
struct Link {
    a: usize,
    b: usize,
    source: LinkSource,
    /// `d_a - d_b`: the element picks up `e^{i ω t}`.
    omega: f64,
}

enum LinkSource {
    Pulse(usize),
    Static(f64),
}

struct InteractionPicture<'a> {
    model: &'a HamiltonianModel,
    links: Vec<Link>,
}

impl<'a> InteractionPicture<'a> {
    fn new(model: &'a HamiltonianModel) -> Self {
        let d = model.diagonal();
        let mut links: Vec<Link> = model
            .couplings()
            .iter()
            .enumerate()
            .map(|(k, c)| Link {
                a: c.excited,
                b: c.ground,
                source: LinkSource::Pulse(k),
                omega: d[c.excited] - d[c.ground],
            })
            .collect();
        links.extend(model.static_couplings().iter().map(|&(a, b, v)| Link {
            a,
            b,
            source: LinkSource::Static(v),
            omega: d[a] - d[b],
        }));
        Self { model, links }
    }

    /// Values `Ṽ_ab(t)` for every link, written into `out`.
    fn values(&self, t: f64, scratch: &mut Vec<C64>, out: &mut Vec<C64>) {
        scratch.resize(self.model.couplings().len(), C64::new(0.0, 0.0));
        self.model.coupling_values(t, scratch);
        out.clear();
        out.extend(self.links.iter().map(|l| {
            let v = match l.source {
                LinkSource::Pulse(k) => scratch[k],
                LinkSource::Static(v) => C64::new(v, 0.0),
            };
            if l.omega == 0.0 {
                v
            } else {
                v * C64::from_polar(1.0, l.omega * t)
            }
        }));
    }

    fn to_interaction(&self, t: f64, psi: &mut [C64]) {
        for (p, &d) in psi.iter_mut().zip(self.model.diagonal()) {
            *p *= C64::from_polar(1.0, d * t);
        }
    }

    fn to_frame(&self, t: f64, psi: &mut [C64]) {
        for (p, &d) in psi.iter_mut().zip(self.model.diagonal()) {
            *p *= C64::from_polar(1.0, -d * t);
        }
    }

    fn rho_to_frame(&self, t: f64, rho: &mut [C64], sign: f64) {
        let d = self.model.diagonal();
        let n = d.len();
        for i in 0..n {
            for j in 0..n {
                rho[i * n + j] *= C64::from_polar(1.0, -sign * (d[i] - d[j]) * t);
            }
        }
    }
}

fn resolve(model: &HamiltonianModel, config: &PropagationConfig) -> Result<((f64, f64), StepControl, Vec<f64>, Vec<f64>)> {
    config.validate()?;
    let window = integration_window(&model.sequence, config.window_multiplier)?;
    let mut shortest = f64::INFINITY;
    for p in model.sequence.pulses() {
        shortest = shortest.min(derive_time_params(p)?.duration);
    }
    let max_step = config.max_step.unwrap_or(0.5 * shortest);
    let control = StepControl {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        max_step,
    };
    // Each pulse centre is a stop so that no pulse can be stepped over.
    let centres: Vec<f64> = model.sequence.pulses().iter().map(|p| p.arrival_time).collect();
    let samples = match config.sample_interval {
        Some(dt) => {
            let n = ((window.1 - window.0) / dt).floor() as usize;
            (0..=n).map(|k| window.0 + k as f64 * dt).collect()
        }
        None => Vec::new(),
    };
    Ok((window, control, centres, samples))
}

fn merge_stops(a: &[f64], b: &[f64], window: (f64, f64)) -> Vec<f64> {
    let mut s: Vec<f64> = a
        .iter()
        .chain(b)
        .copied()
        .filter(|&t| t > window.0 && t < window.1)
        .collect();
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

/// Solves `i dψ/dt = H(t) ψ` across the integration window.
pub fn propagate_schrodinger(
    model: &HamiltonianModel,
    psi0: &DVector<C64>,
    config: &PropagationConfig,
) -> Result<SchrodingerOutcome> {
    let n = model.dim();
    if psi0.len() != n {
        return Err(Error::param(format!("initial state has {} entries, basis has {n}", psi0.len())));
    }
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(Error::param(format!("initial state is not normalized (norm {norm0})")));
    }
    let (window, control, centres, samples) = resolve(model, config)?;
    let ip = InteractionPicture::new(model);

    let rhs = {
        let ip = &ip;
        move |t: f64, y: &[C64], dy: &mut [C64]| {
            let mut scratch = Vec::new();
            let mut vals = Vec::with_capacity(ip.links.len());
            ip.values(t, &mut scratch, &mut vals);
            for d in dy.iter_mut() {
                *d = C64::new(0.0, 0.0);
            }
            let mi = C64::new(0.0, -1.0);
            for (l, v) in ip.links.iter().zip(&vals) {
                dy[l.a] += mi * v * y[l.b];
                dy[l.b] += mi * v.conj() * y[l.a];
            }
        }
    };

    let mut y: Vec<C64> = psi0.iter().copied().collect();
    ip.to_interaction(window.0, &mut y);
    let stops = merge_stops(&centres, &samples, window);
    let sample_set = samples;
    let mut trajectory = (!sample_set.is_empty()).then(|| TrajectoryRecord {
        kind: SnapshotKind::Amplitudes,
        labels: model.basis().iter().map(|s| s.label()).collect(),
        times: Vec::new(),
        snapshots: Vec::new(),
        norms: Vec::new(),
    });
    let record = |traj: &mut Option<TrajectoryRecord>, t: f64, y: &[C64]| {
        if let Some(tr) = traj.as_mut() {
            let mut psi = y.to_vec();
            ip.to_frame(t, &mut psi);
            tr.norms.push(psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt());
            tr.times.push(t);
            tr.snapshots.push(psi);
        }
    };
    if sample_set.first() == Some(&window.0) {
        record(&mut trajectory, window.0, &y);
    }

    let mut stepper = Dop853::new(&rhs, n, control)?;
    stepper.integrate(
        window.0,
        window.1,
        &mut y,
        &stops,
        |t, y| {
            if sample_set.binary_search_by(|s| s.total_cmp(&t)).is_ok() {
                record(&mut trajectory, t, y);
            }
        },
        |_| {},
    )?;
    if !sample_set.is_empty() && sample_set.last() != Some(&window.1) {
        record(&mut trajectory, window.1, &y);
    }
    ip.to_frame(window.1, &mut y);
    Ok(SchrodingerOutcome {
        state: DVector::from_vec(y),
        window,
        trajectory,
        stats: stepper.stats,
    })
}

/// Checks that `rho` is a valid density matrix.
pub fn validate_density_matrix(rho: &DMatrix<C64>, tol: f64) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::param("density matrix must be square"));
    }
    if (rho - rho.adjoint()).norm() > tol {
        return Err(Error::param("density matrix is not Hermitian"));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::param(format!("density matrix trace is {tr}, expected 1")));
    }
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let min = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::param(format!("density matrix is not positive semidefinite (eigenvalue {min:e})")));
    }
    Ok(())
}

/// Solves the Lindblad master equation with the model's decay channels.
pub fn propagate_lindblad(
    model: &HamiltonianModel,
    rho0: &DMatrix<C64>,
    config: &PropagationConfig,
) -> Result<LindbladOutcome> {
    let n = model.dim();
    if rho0.nrows() != n || rho0.ncols() != n {
        return Err(Error::param(format!("density matrix must be {n}x{n}")));
    }
    validate_density_matrix(rho0, 1e-9)?;
    let (window, control, centres, samples) = resolve(model, config)?;
    let ip = InteractionPicture::new(model);
    let decay = model.decay_channels();
    let mut loss = vec![0.0; n];
    for c in decay {
        loss[c.from] += c.rate;
    }

    let rhs = {
        let ip = &ip;
        let loss = &loss;
        move |t: f64, r: &[C64], dr: &mut [C64]| {
            let mut scratch = Vec::new();
            let mut vals = Vec::with_capacity(ip.links.len());
            ip.values(t, &mut scratch, &mut vals);
            for d in dr.iter_mut() {
                *d = C64::new(0.0, 0.0);
            }
            let mi = C64::new(0.0, -1.0);
            // -i [V, ρ] over the sparse links.
            for (l, v) in ip.links.iter().zip(&vals) {
                let (a, b) = (l.a, l.b);
                let vc = v.conj();
                for j in 0..n {
                    dr[a * n + j] += mi * v * r[b * n + j];
                    dr[b * n + j] += mi * vc * r[a * n + j];
                    dr[j * n + b] -= mi * r[j * n + a] * v;
                    dr[j * n + a] -= mi * r[j * n + b] * vc;
                }
            }
            for c in decay {
                dr[c.to * n + c.to] += r[c.from * n + c.from] * c.rate;
            }
            for i in 0..n {
                for j in 0..n {
                    let g = loss[i] + loss[j];
                    if g != 0.0 {
                        dr[i * n + j] -= r[i * n + j] * (0.5 * g);
                    }
                }
            }
        }
    };

    let mut y: Vec<C64> = (0..n * n).map(|k| rho0[(k / n, k % n)]).collect();
    ip.rho_to_frame(window.0, &mut y, -1.0);
    let stops = merge_stops(&centres, &samples, window);
    let sample_set = samples;
    let mut trajectory = (!sample_set.is_empty()).then(|| TrajectoryRecord {
        kind: SnapshotKind::DensityMatrix,
        labels: model.basis().iter().map(|s| s.label()).collect(),
        times: Vec::new(),
        snapshots: Vec::new(),
        norms: Vec::new(),
    });
    let record = |traj: &mut Option<TrajectoryRecord>, t: f64, y: &[C64]| {
        if let Some(tr) = traj.as_mut() {
            let mut rho = y.to_vec();
            ip.rho_to_frame(t, &mut rho, 1.0);
            tr.norms.push((0..n).map(|i| rho[i * n + i].re).sum());
            tr.times.push(t);
            tr.snapshots.push(rho);
        }
    };
    if sample_set.first() == Some(&window.0) {
        record(&mut trajectory, window.0, &y);
    }
    let symmetrize = |r: &mut [C64]| {
        for i in 0..n {
            r[i * n + i].im = 0.0;
            for j in i + 1..n {
                let m = (r[i * n + j] + r[j * n + i].conj()) * 0.5;
                r[i * n + j] = m;
                r[j * n + i] = m.conj();
            }
        }
    };

    let mut stepper = Dop853::new(&rhs, n * n, control)?;
    stepper.integrate(
        window.0,
        window.1,
        &mut y,
        &stops,
        |t, y| {
            if sample_set.binary_search_by(|s| s.total_cmp(&t)).is_ok() {
                record(&mut trajectory, t, y);
            }
        },
        symmetrize,
    )?;
    if !sample_set.is_empty() && sample_set.last() != Some(&window.1) {
        record(&mut trajectory, window.1, &y);
    }
    ip.rho_to_frame(window.1, &mut y, 1.0);
    Ok(LindbladOutcome {
        state: DMatrix::from_fn(n, n, |i, j| y[i * n + j]),
        window,
        trajectory,
        stats: stepper.stats,
    })
}
