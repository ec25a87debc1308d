use std::f64::consts::PI;

use berrygate::atom::{default_rb87, AtomSpec, BasisState, Level};
use berrygate::dynamics::{
    adiabaticity, instantaneous_eigensystem, propagate_lindblad, propagate_schrodinger, HamiltonianModel, ModelOptions,
    PropagationConfig, DEFAULT_CYCLIC_THRESHOLD, wrap_pi,
};
use berrygate::pulse::{ChirpedPulseSpec, PolarizationState, PulseEnvelope, PulseSequence};
use berrygate::scenario::GateScenario;
use berrygate::C64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{basis_vector, converged_magnus};

const WIDTH: f64 = 15.09;

fn ground(two_mj: i32, two_mi: i32) -> BasisState {
    BasisState::from_twice(Level::S12, two_mj, two_mi, 3).unwrap()
}

fn single_pulse(atom: &AtomSpec, chirp: f64, area: f64, detuning: f64, angle: f64, eps: f64) -> PulseSequence {
    let p = ChirpedPulseSpec::new(
        atom.d1_frequency + detuning,
        WIDTH,
        chirp,
        PolarizationState::new(angle, eps).unwrap(),
        0.0,
        area,
    )
    .unwrap();
    PulseSequence::single(p).unwrap()
}

fn closed(include_p32: bool) -> ModelOptions {
    ModelOptions {
        include_p32,
        include_decay: false,
        include_hyperfine_term: false,
    }
}

/// The σ⁺ two-level system `S½(-½) ↔ P½(+½)`.
fn two_level(chirp: f64, area: f64, detuning: f64) -> (HamiltonianModel, usize, usize) {
    let atom = default_rb87();
    let seq = single_pulse(&atom, chirp, area, detuning, 0.0, 0.0);
    let g = ground(-1, 1);
    let model = HamiltonianModel::from_seeds(&atom, &seq, &[g], closed(false)).unwrap();
    assert_eq!(model.dim(), 2);
    let gi = model.index_of(&g).unwrap();
    (model, gi, 1 - gi)
}

/// Two-level Hamiltonian written in the frame co-moving with the chirp, where
/// it is real: `[[0, Ω/2], [Ω/2, -δΔ - 2Γs]]` on `(g, e)`.
fn chirp_frame_hamiltonian(env: &PulseEnvelope, detuning: f64) -> impl Fn(f64) -> DMatrix<C64> + '_ {
    move |t: f64| {
        let omega = env.scalar(t).norm();
        let d = -detuning - 2.0 * env.params.chirp_rate * t;
        DMatrix::from_row_slice(2, 2, &[0.0, omega / 2.0, omega / 2.0, d].map(|x| C64::new(x, 0.0)))
    }
}

#[test]
fn two_level_transfer_matches_chirp_frame_reference() {
    for &(chirp, area, detuning) in &[(0.072, 6.0 * PI, 0.0), (0.072, 2.0 * PI, 3.0), (-0.05, 9.0 * PI, -2.0), (0.0, PI, 0.0)] {
        let (model, g, e) = two_level(chirp, area, detuning);
        let out = propagate_schrodinger(&model, &basis_vector(2, g), &PropagationConfig::default()).unwrap();
        let env = &model.envelopes()[0];
        let h = chirp_frame_hamiltonian(env, detuning);
        let reference = converged_magnus(&h, &basis_vector(2, 0), out.window, 1e-9);
        let got = out.state[e].norm_sqr();
        let want = reference[1].norm_sqr();
        assert!((got - want).abs() < 1e-6, "c {chirp} A {area} δ {detuning}: {got} vs {want}");
    }
    let (model, g, e) = two_level(0.072, 6.0 * PI, 0.0);
    let out = propagate_schrodinger(&model, &basis_vector(2, g), &PropagationConfig::default()).unwrap();
    assert!(out.state[e].norm_sqr() > 0.999);
}

#[test]
fn resonant_unchirped_pulse_is_a_rabi_rotation() {
    for area in [0.5 * PI, PI, 2.0 * PI, 3.3] {
        let (model, g, e) = two_level(0.0, area, 0.0);
        let out = propagate_schrodinger(&model, &basis_vector(2, g), &PropagationConfig::default()).unwrap();
        let want = (area / 2.0).sin().powi(2);
        assert!((out.state[e].norm_sqr() - want).abs() < 1e-8, "area {area}");
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn adiabatic_transfer_phase_follows_the_dressed_energy() {
    for &chirp in &[0.072, -0.072] {
        for k in [6.0, 8.0, 10.0, 12.0] {
            let (model, g, e) = two_level(chirp, k * PI, 0.0);
            let out = propagate_schrodinger(&model, &basis_vector(2, g), &PropagationConfig::default()).unwrap();
            let env = &model.envelopes()[0];
            let (ti, tf) = out.window;
            let gamma = env.params.chirp_rate;
            // The state starts in the lower dressed state for Γ > 0 and the upper one for Γ < 0;
            // the lower branch ends on -|e⟩, the upper one on +|e⟩.
            let branch = -gamma.signum();
            // Dressed energy plus the leading superadiabatic shift ±ϑ̇²/gap.
            let mixing = |t: f64| 0.5 * env.scalar(t).norm().atan2(-2.0 * gamma * t);
            let energy = |t: f64| {
                let omega = env.scalar(t).norm();
                let d = -2.0 * gamma * t;
                let gap = (d * d + omega * omega).sqrt();
                let rate = (mixing(t + 1e-5) - mixing(t - 1e-5)) / 2e-5;
                (d + branch * gap) / 2.0 + branch * rate * rate / gap
            };
            let dynamic = simpson(energy, ti, tf, 400_000);
            let chi = gamma * tf * tf + env.params.phase;
            let flip = if gamma > 0.0 { PI } else { 0.0 };
            let want = -chi + flip - dynamic;
            let got = out.state[e].arg();
            let diff = wrap_pi(got - want);
            assert!(diff.abs() < 1e-2, "c {chirp} area {k}π: phase {got} vs {want}");
        }
    }
}

#[test]
fn zero_field_only_accumulates_detuning_phase() {
    let (model, g, e) = two_level(0.072, 0.0, 1.7);
    let cfg = PropagationConfig::default();
    let out = propagate_schrodinger(&model, &basis_vector(2, g), &cfg).unwrap();
    assert!((out.state[g] - C64::new(1.0, 0.0)).norm() < 1e-12);
    let out = propagate_schrodinger(&model, &basis_vector(2, e), &cfg).unwrap();
    let span = out.window.1 - out.window.0;
    let want = C64::from_polar(1.0, 1.7 * span);
    assert!((out.state[e] - want).norm() < 1e-9, "{} vs {want}", out.state[e]);
}

#[test]
fn weak_pulse_is_not_adiabatic() {
    let (model, g, e) = two_level(0.072, 0.1 * PI, 0.0);
    let out = propagate_schrodinger(&model, &basis_vector(2, g), &PropagationConfig::default()).unwrap();
    assert!(out.state[e].norm_sqr() < 0.5);
    let env = &model.envelopes()[0];
    let worst = (-400..=400)
        .map(|i| adiabaticity(&env.params, env.peak_rabi, i as f64 * 0.01))
        .fold(0.0, f64::max);
    assert!(worst > 1.0, "max adiabaticity {worst}");
}

#[test]
fn excited_state_decays_exponentially_with_dipole_branching() {
    let mut atom = default_rb87();
    atom.gamma_d1 = 0.3;
    let seq = single_pulse(&atom, 0.072, 0.0, 0.0, 0.0, 0.0);
    let excited = BasisState::from_twice(Level::P12, 1, 1, 3).unwrap();
    let options = ModelOptions {
        include_decay: true,
        ..closed(false)
    };
    let model = HamiltonianModel::from_seeds(&atom, &seq, &[ground(-1, 1)], options).unwrap();
    let n = model.dim();
    let ei = model.index_of(&excited).unwrap();
    let up = model.index_of(&ground(1, 1)).unwrap();
    let down = model.index_of(&ground(-1, 1)).unwrap();
    let mut rho0 = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    rho0[(ei, ei)] = C64::new(1.0, 0.0);
    let cfg = PropagationConfig::default().with_samples(0.1);
    let out = propagate_lindblad(&model, &rho0, &cfg).unwrap();
    let traj = out.trajectory.unwrap();
    for (k, &t) in traj.times.iter().enumerate() {
        let p = traj.populations(k);
        let left = (-0.3 * (t - out.window.0)).exp();
        assert!((p[ei] - left).abs() < 1e-9, "t {t}: {} vs {left}", p[ei]);
        assert!((p[up] - (1.0 - left) / 3.0).abs() < 1e-9);
        assert!((p[down] - 2.0 * (1.0 - left) / 3.0).abs() < 1e-9);
    }
}

#[test]
fn lindblad_trajectories_stay_physical() {
    let mut s = GateScenario::default();
    s.atom.gamma_d1 = 0.05;
    s.atom.gamma_d2 = 0.05;
    s.options.include_decay = true;
    let model = s.model().unwrap();
    let n = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = DVector::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let grounds: Vec<usize> = (0..n).filter(|&i| !model.basis()[i].level.is_excited()).collect();
    let mut psi = DVector::from_element(n, C64::new(0.0, 0.0));
    for &i in &grounds {
        psi[i] = v[i];
    }
    let psi = &psi / C64::new(psi.norm(), 0.0);
    let rho0 = &psi * psi.adjoint();
    let out = propagate_lindblad(&model, &rho0, &PropagationConfig::default().with_samples(0.05)).unwrap();
    let traj = out.trajectory.unwrap();
    for k in 0..traj.times.len() {
        let rho = DMatrix::from_row_slice(n, n, &traj.snapshots[k]);
        let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(herm < 1e-12);
        let min = rho.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > -1e-9, "t {}: eigenvalue {min}", traj.times[k]);
        assert!((traj.norms[k] - 1.0).abs() < 1e-9);
    }
}

#[test]
fn linear_polarization_drives_both_pathways_equally() {
    let atom = default_rb87();
    let plus = ground(1, -1);
    let minus = ground(-1, 1);
    for (eps, equal) in [(0.0, true), (0.1, false)] {
        let seq = single_pulse(&atom, 0.072, 2.5 * PI, 0.8, 0.37, eps);
        let model = HamiltonianModel::from_seeds(&atom, &seq, &[plus, minus], closed(true)).unwrap();
        let cfg = PropagationConfig::default().with_samples(0.05);
        let run = |s: &BasisState| {
            let i = model.index_of(s).unwrap();
            let out = propagate_schrodinger(&model, &basis_vector(model.dim(), i), &cfg).unwrap();
            let traj = out.trajectory.unwrap();
            (0..traj.times.len()).map(|k| traj.populations(k)[i]).collect::<Vec<_>>()
        };
        let gap = run(&plus).iter().zip(run(&minus)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if equal {
            assert!(gap < 1e-9, "ε = 0 gap {gap}");
        } else {
            assert!(gap > 1e-4, "ε = 0.1 gap {gap}");
        }
    }
}

#[test]
fn stark_shift_cancels_in_the_relative_phase() {
    let mut s = GateScenario::default();
    let mut relative = Vec::new();
    for p32 in [false, true] {
        s.options.include_p32 = p32;
        let ph = s.pathway_phases(DEFAULT_CYCLIC_THRESHOLD).unwrap();
        relative.push((ph.relative(), ph.phi_plus));
    }
    let shift = wrap_pi(relative[1].0 - relative[0].0).abs();
    assert!(shift < 2e-2, "relative phase moved by {shift}");
    let common_shift = (relative[1].1 - relative[0].1).abs();
    assert!(common_shift > 1e-2, "P3/2 coupling left the pathway phase unchanged");
}

#[test]
fn hamiltonian_is_hermitian() {
    let mut s = GateScenario {
        ellipticity1: 0.2,
        detuning: 1.5,
        ..GateScenario::default()
    };
    s.options.include_hyperfine_term = true;
    let model = s.model().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let t = rng.random_range(-12.0..12.0);
        let h = model.build_hamiltonian(t);
        let err = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_eq!(err, 0.0, "t {t}");
    }
}

#[test]
fn two_level_eigensystem_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let omega = rng.random_range(-50.0..50.0);
        let delta = rng.random_range(-50.0..50.0);
        let es = instantaneous_eigensystem(omega, delta);
        let h = nalgebra::Matrix2::new(-delta / 2.0, omega.abs() / 2.0, omega.abs() / 2.0, delta / 2.0);
        let (vp, vm) = es.eigenvectors().unwrap();
        for (v, e) in [(vp, es.energy_plus), (vm, es.energy_minus)] {
            let v = nalgebra::Vector2::new(v[0], v[1]);
            let r = (h * v - v * e).norm();
            assert!(r < 1e-12 * (1.0 + omega.abs() + delta.abs()), "Ω {omega} Δ {delta}: residual {r}");
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }
    assert!(instantaneous_eigensystem(0.0, 0.0).mixing_angle.is_none());
}

#[test]
fn integrator_matches_magnus_reference_on_random_pulses() {
    let atom = default_rb87();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let chirp = rng.random_range(-0.1..0.1);
        let area = rng.random_range(1.0..12.0) * PI;
        let detuning = rng.random_range(-6.0..6.0);
        let angle = rng.random_range(0.0..PI);
        let eps = rng.random_range(-0.2..0.2);
        let p32 = rng.random_bool(0.5);
        let seq = single_pulse(&atom, chirp, area, detuning, angle, eps);
        let model = HamiltonianModel::from_seeds(&atom, &seq, &[ground(1, -1), ground(-1, 1)], closed(p32)).unwrap();
        let n = model.dim();
        let psi0 = DVector::from_fn(n, |i, _| {
            if model.basis()[i].level.is_excited() {
                C64::new(0.0, 0.0)
            } else {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }
        });
        let psi0 = &psi0 / C64::new(psi0.norm(), 0.0);
        let out = propagate_schrodinger(&model, &psi0, &PropagationConfig::default()).unwrap();
        let h = |t: f64| model.build_hamiltonian(t);
        let reference = converged_magnus(&h, &psi0, out.window, 1e-9);
        let fidelity = out.state.dotc(&reference).norm_sqr();
        worst = worst.max(1.0 - fidelity);
    }
    assert!(worst < 1e-6, "worst infidelity {worst:e}");
}
