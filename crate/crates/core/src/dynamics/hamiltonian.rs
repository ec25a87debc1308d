use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::atom::{branching_ratio, decompose_twice, dipole_factor, AtomSpec, BasisState, HyperfineState, Level};
use crate::pulse::{Circular, PulseEnvelope, PulseSequence};
use crate::{Error, Result, C64};

/// Which physical effects enter the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    /// Couple to P³⁄₂ (D2 line), producing the dynamic Stark shift.
    pub include_p32: bool,
    /// Spontaneous emission from excited states (Lindblad only).
    pub include_decay: bool,
    /// Ground hyperfine splitting during the pulses.
    pub include_hyperfine_term: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            include_p32: true,
            include_decay: false,
            include_hyperfine_term: false,
        }
    }
}

/// Laser coupling between an excited and a ground basis state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub excited: usize,
    pub ground: usize,
    pub component: Circular,
    pub factor: f64,
}

/// Spontaneous decay `from → to` at `rate` (rad/ps).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayChannel {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

/// Rotating-frame multilevel model for one pulse sequence.
///
/// The frame rotates at the carrier of the earliest pulse. The Hamiltonian is
/// split into a static diagonal part (level detunings and the diagonal of the
/// hyperfine term) and a coupling part holding the pulse couplings plus the
/// off-diagonal hyperfine elements.
#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    pub atom: AtomSpec,
    pub sequence: PulseSequence,
    pub options: ModelOptions,
    frame_frequency: f64,
    seeds: Vec<BasisState>,
    basis: Vec<BasisState>,
    diagonal: Vec<f64>,
    envelopes: Vec<PulseEnvelope>,
    carrier_offsets: Vec<f64>,
    couplings: Vec<Coupling>,
    static_couplings: Vec<(usize, usize, f64)>,
    decay: Vec<DecayChannel>,
}

impl HamiltonianModel {
    /// Model for the ground pair with total projection `m_F` (and everything it couples to).
    pub fn for_manifold(
        atom: &AtomSpec,
        sequence: &PulseSequence,
        m_f: f64,
        options: ModelOptions,
    ) -> Result<Self> {
        let seeds = manifold_ground_states(atom, m_f)?;
        Self::from_seeds(atom, sequence, &seeds, options)
    }

    /// Model whose basis is the closure of `seeds` under laser couplings
    /// (and decay channels when enabled).
    pub fn from_seeds(
        atom: &AtomSpec,
        sequence: &PulseSequence,
        seeds: &[BasisState],
        options: ModelOptions,
    ) -> Result<Self> {
        atom.validate()?;
        if sequence.is_empty() {
            return Err(Error::param("pulse sequence is empty"));
        }
        if seeds.is_empty() {
            return Err(Error::param("no seed states"));
        }
        let two_i = atom.two_i();
        for s in seeds {
            BasisState::from_twice(s.level, s.two_mj, s.two_mi, two_i)?;
        }
        let basis = close_basis(atom, seeds, options);
        let index = |s: &BasisState| basis.binary_search(s).ok();

        let frame_frequency = sequence.pulses()[0].carrier_frequency;
        let envelopes = sequence
            .pulses()
            .iter()
            .map(PulseEnvelope::new)
            .collect::<Result<Vec<_>>>()?;
        let carrier_offsets = sequence
            .pulses()
            .iter()
            .map(|p| p.carrier_frequency - frame_frequency)
            .collect();

        let mut diagonal: Vec<f64> = basis
            .iter()
            .map(|s| atom.level_detuning(s.level, frame_frequency))
            .collect();

        let mut couplings = Vec::new();
        for (e, es) in basis.iter().enumerate().filter(|(_, s)| s.level.is_excited()) {
            for (g, gs) in basis.iter().enumerate().filter(|(_, s)| !s.level.is_excited()) {
                if gs.two_mi != es.two_mi {
                    continue;
                }
                let Some(component) = Circular::from_q((es.two_mj - gs.two_mj) / 2) else {
                    continue;
                };
                let factor = dipole_factor(atom, component.q(), gs.two_mj, es.level);
                if factor != 0.0 {
                    couplings.push(Coupling {
                        excited: e,
                        ground: g,
                        component,
                        factor,
                    });
                }
            }
        }

        let mut static_couplings = Vec::new();
        if options.include_hyperfine_term && atom.hyperfine_splitting != 0.0 {
            let grounds: Vec<usize> = (0..basis.len()).filter(|&i| !basis[i].level.is_excited()).collect();
            let mfs: BTreeSet<i32> = grounds.iter().map(|&i| basis[i].two_mf()).collect();
            for two_mf in mfs {
                let lower = HyperfineState {
                    two_f: two_i - 1,
                    two_mf,
                };
                if two_mf.abs() > two_i - 1 {
                    continue;
                }
                let comps: Vec<(usize, f64)> = decompose_twice(two_i, lower)
                    .into_iter()
                    .filter_map(|(tmj, tmi, c)| {
                        index(&BasisState {
                            level: Level::S12,
                            two_mj: tmj,
                            two_mi: tmi,
                        })
                        .map(|i| (i, c))
                    })
                    .collect();
                for (a, &(ia, ca)) in comps.iter().enumerate() {
                    diagonal[ia] += atom.hyperfine_splitting * ca * ca;
                    for &(ib, cb) in &comps[a + 1..] {
                        static_couplings.push((ia, ib, atom.hyperfine_splitting * ca * cb));
                    }
                }
            }
        }

        let mut decay = Vec::new();
        if options.include_decay {
            for (e, es) in basis.iter().enumerate().filter(|(_, s)| s.level.is_excited()) {
                let gamma = atom.decay_rate(es.level);
                for two_mj in [1, -1] {
                    let target = BasisState {
                        level: Level::S12,
                        two_mj,
                        two_mi: es.two_mi,
                    };
                    let b = branching_ratio(atom, *es, two_mj);
                    if let (Some(g), true) = (index(&target), b > 0.0 && gamma > 0.0) {
                        decay.push(DecayChannel {
                            from: e,
                            to: g,
                            rate: gamma * b,
                        });
                    }
                }
            }
        }

        Ok(Self {
            atom: atom.clone(),
            sequence: sequence.clone(),
            options,
            frame_frequency,
            seeds: seeds.to_vec(),
            basis,
            diagonal,
            envelopes,
            carrier_offsets,
            couplings,
            static_couplings,
            decay,
        })
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    /// The states the basis was grown from.
    pub fn seed_states(&self) -> &[BasisState] {
        &self.seeds
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.basis.binary_search(state).ok()
    }

    pub fn frame_frequency(&self) -> f64 {
        self.frame_frequency
    }

    /// Static diagonal of the Hamiltonian, rad/ps.
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// Time-independent off-diagonal elements `(a, b, H_ab)` with `a < b`.
    pub fn static_couplings(&self) -> &[(usize, usize, f64)] {
        &self.static_couplings
    }

    pub fn decay_channels(&self) -> &[DecayChannel] {
        &self.decay
    }

    pub fn envelopes(&self) -> &[PulseEnvelope] {
        &self.envelopes
    }

    /// Writes `H_eg(t)` for every entry of [`couplings`](Self::couplings) into `out`.
    pub fn coupling_values(&self, t: f64, out: &mut [C64]) {
        let mut plus = C64::new(0.0, 0.0);
        let mut minus = C64::new(0.0, 0.0);
        for (env, &offset) in self.envelopes.iter().zip(&self.carrier_offsets) {
            let mut pair = env.evaluate(t);
            if offset != 0.0 {
                let rot = C64::from_polar(1.0, -offset * t);
                pair.plus *= rot;
                pair.minus *= rot;
            }
            plus += pair.plus;
            minus += pair.minus;
        }
        for (c, o) in self.couplings.iter().zip(out.iter_mut()) {
            let omega = match c.component {
                Circular::Plus => plus,
                Circular::Minus => minus,
            };
            *o = omega * (0.5 * c.factor);
        }
    }

    /// Dense Hamiltonian at time `t` in the rotating frame.
    pub fn build_hamiltonian(&self, t: f64) -> DMatrix<C64> {
        let n = self.dim();
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            self.diagonal.iter().map(|&d| C64::new(d, 0.0)),
        ));
        let mut vals = vec![C64::new(0.0, 0.0); self.couplings.len()];
        self.coupling_values(t, &mut vals);
        for (c, v) in self.couplings.iter().zip(vals) {
            h[(c.excited, c.ground)] += v;
            h[(c.ground, c.excited)] += v.conj();
        }
        for &(a, b, v) in &self.static_couplings {
            h[(a, b)] += C64::new(v, 0.0);
            h[(b, a)] += C64::new(v, 0.0);
        }
        h
    }
}

/// Build a Hamiltonian at time `t` (free-function form of [`HamiltonianModel::build_hamiltonian`]).
pub fn build_hamiltonian(model: &HamiltonianModel, t: f64) -> DMatrix<C64> {
    model.build_hamiltonian(t)
}

/// The ground states `S½, m_J = ∓½` with `m_J + m_I = m_F`, ordered `[m_J = -½, m_J = +½]`
/// and omitting any that do not exist.
pub fn manifold_ground_states(atom: &AtomSpec, m_f: f64) -> Result<Vec<BasisState>> {
    let two_i = atom.two_i();
    let two_mf = (2.0 * m_f).round() as i32;
    if (2.0 * m_f - two_mf as f64).abs() > 1e-9 || (two_mf + two_i + 1) % 2 != 0 {
        return Err(Error::param(format!("m_F = {m_f} is not valid for I = {}", atom.nuclear_spin)));
    }
    if two_mf.abs() > two_i + 1 {
        return Err(Error::param(format!("|m_F| = {} exceeds I + 1/2", m_f.abs())));
    }
    Ok([-1, 1]
        .into_iter()
        .filter_map(|tmj| BasisState::from_twice(Level::S12, tmj, two_mf - tmj, two_i).ok())
        .collect())
}

fn close_basis(atom: &AtomSpec, seeds: &[BasisState], options: ModelOptions) -> Vec<BasisState> {
    let two_i = atom.two_i();
    let mut excited_levels = vec![Level::P12];
    if options.include_p32 {
        excited_levels.push(Level::P32);
    }
    let mut seen: BTreeSet<BasisState> = seeds.iter().copied().collect();
    let mut queue: VecDeque<BasisState> = seeds.iter().copied().collect();
    while let Some(s) = queue.pop_front() {
        let mut neighbours = Vec::new();
        if s.level.is_excited() {
            for two_mj in [1, -1] {
                let q2 = s.two_mj - two_mj;
                let laser = q2.abs() == 2 && dipole_factor(atom, q2 / 2, two_mj, s.level) != 0.0;
                let decays = options.include_decay && branching_ratio(atom, s, two_mj) > 0.0;
                if laser || decays {
                    neighbours.push(BasisState {
                        level: Level::S12,
                        two_mj,
                        two_mi: s.two_mi,
                    });
                }
            }
        } else {
            for &level in &excited_levels {
                for q in [1, -1] {
                    let two_mj = s.two_mj + 2 * q;
                    if let Ok(e) = BasisState::from_twice(level, two_mj, s.two_mi, two_i) {
                        if dipole_factor(atom, q, s.two_mj, level) != 0.0 {
                            neighbours.push(e);
                        }
                    }
                }
            }
        }
        for n in neighbours {
            if n.level != Level::P32 || options.include_p32 {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }
    seen.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::default_rb87;
    use crate::pulse::{ChirpedPulseSpec, PolarizationState};
    use std::f64::consts::{PI, TAU};

    fn sequence(atom: &AtomSpec) -> PulseSequence {
        let p = ChirpedPulseSpec::new(
            atom.d1_frequency,
            15.0,
            0.072,
            PolarizationState::linear(0.0),
            0.0,
            6.0 * PI,
        )
        .unwrap();
        PulseSequence::pair(p.clone(), p.with_phase_offset(0.3), 7.0).unwrap()
    }

    #[test]
    fn manifold_sizes() {
        let rb = default_rb87();
        let seq = sequence(&rb);
        let closed = |p32, decay| ModelOptions {
            include_p32: p32,
            include_decay: decay,
            include_hyperfine_term: false,
        };
        assert_eq!(HamiltonianModel::for_manifold(&rb, &seq, 0.0, closed(false, false)).unwrap().dim(), 4);
        assert_eq!(HamiltonianModel::for_manifold(&rb, &seq, 0.0, closed(true, false)).unwrap().dim(), 8);
        assert_eq!(HamiltonianModel::for_manifold(&rb, &seq, 0.0, closed(true, true)).unwrap().dim(), 16);
        let stretched = HamiltonianModel::for_manifold(&rb, &seq, 2.0, closed(true, false)).unwrap();
        assert_eq!(stretched.dim(), 4);
        assert!(HamiltonianModel::for_manifold(&rb, &seq, 3.0, closed(true, false)).is_err());
        assert!(HamiltonianModel::for_manifold(&rb, &seq, 0.5, closed(true, false)).is_err());
    }

    #[test]
    fn hermitian_at_random_times() {
        let rb = default_rb87();
        let opts = ModelOptions {
            include_hyperfine_term: true,
            ..Default::default()
        };
        let m = HamiltonianModel::for_manifold(&rb, &sequence(&rb), 0.0, opts).unwrap();
        assert!(!m.static_couplings().is_empty());
        for k in 0..100 {
            let t = -15.0 + 0.3 * k as f64;
            let h = m.build_hamiltonian(t);
            assert!((&h - h.adjoint()).norm() < 1e-14);
        }
    }

    #[test]
    fn far_from_pulses_is_diagonal() {
        let rb = default_rb87();
        let m = HamiltonianModel::for_manifold(&rb, &sequence(&rb), 0.0, ModelOptions::default()).unwrap();
        let h = m.build_hamiltonian(200.0);
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                if i != j {
                    assert_eq!(h[(i, j)].norm(), 0.0);
                }
            }
        }
        let p32 = m.basis().iter().position(|s| s.level == Level::P32).unwrap();
        assert!((h[(p32, p32)].re - TAU * 7.123).abs() < 1e-9);
    }

    #[test]
    fn hyperfine_term_splits_clock_states() {
        let rb = default_rb87();
        let opts = ModelOptions {
            include_p32: false,
            include_hyperfine_term: true,
            include_decay: false,
        };
        let m = HamiltonianModel::for_manifold(&rb, &sequence(&rb), 0.0, opts).unwrap();
        let h = m.build_hamiltonian(500.0);
        let ground: Vec<usize> = (0..m.dim()).filter(|&i| !m.basis()[i].level.is_excited()).collect();
        let block = DMatrix::from_fn(2, 2, |i, j| h[(ground[i], ground[j])]);
        let eig = block.symmetric_eigenvalues();
        let mut ev: Vec<f64> = eig.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-15);
        assert!((ev[1] - rb.hyperfine_splitting).abs() < 1e-15);
    }

    #[test]
    fn decay_channels_conserve_rate() {
        let rb = default_rb87();
        let opts = ModelOptions {
            include_decay: true,
            ..Default::default()
        };
        let m = HamiltonianModel::for_manifold(&rb, &sequence(&rb), 1.0, opts).unwrap();
        for (e, s) in m.basis().iter().enumerate().filter(|(_, s)| s.level.is_excited()) {
            let total: f64 = m.decay_channels().iter().filter(|c| c.from == e).map(|c| c.rate).sum();
            assert!((total - rb.decay_rate(s.level)).abs() < 1e-18, "{}", s.label());
        }
    }
}
