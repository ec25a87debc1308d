use serde::{Deserialize, Serialize};

use super::angular::{cg_twice, HalfInt};
use crate::pulse::Circular;
use crate::{thz_to_rad_per_ps, Error, Result};

/// Fine-structure level of the alkali valence electron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    S12,
    P12,
    P32,
}

impl Level {
    /// Twice the electronic angular momentum J.
    pub fn two_j(self) -> i32 {
        match self {
            Level::S12 | Level::P12 => 1,
            Level::P32 => 3,
        }
    }

    pub fn is_excited(self) -> bool {
        !matches!(self, Level::S12)
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::S12 => "S1/2",
            Level::P12 => "P1/2",
            Level::P32 => "P3/2",
        }
    }
}

/// Static description of an alkali atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    /// Nuclear spin I (half-integer).
    pub nuclear_spin: f64,
    /// S½ → P½ transition frequency ω₀, rad/ps.
    pub d1_frequency: f64,
    /// P³⁄₂ − P½ splitting Δ_fs, rad/ps.
    pub fine_structure_splitting: f64,
    /// Ground hyperfine splitting ω_hf, rad/ps.
    pub hyperfine_splitting: f64,
    /// Excited-state decay rates, rad/ps.
    pub gamma_d1: f64,
    pub gamma_d2: f64,
    /// Reduced dipole matrix element of D2 relative to D1.
    pub d2_coupling_ratio: f64,
}

/// ⁸⁷Rb with standard line data.
pub fn default_rb87() -> AtomSpec {
    AtomSpec {
        nuclear_spin: 1.5,
        d1_frequency: thz_to_rad_per_ps(377.1),
        fine_structure_splitting: thz_to_rad_per_ps(7.123),
        hyperfine_splitting: thz_to_rad_per_ps(6.834_682_610_904_29e-3),
        gamma_d1: thz_to_rad_per_ps(5.75e-6),
        gamma_d2: thz_to_rad_per_ps(6.07e-6),
        d2_coupling_ratio: std::f64::consts::SQRT_2,
    }
}

impl Default for AtomSpec {
    fn default() -> Self {
        default_rb87()
    }
}

impl AtomSpec {
    pub fn validate(&self) -> Result<()> {
        let two_i = HalfInt::from_f64(self.nuclear_spin)?.twice();
        if two_i < 1 {
            return Err(Error::param("nuclear spin must be at least 1/2"));
        }
        let rates = [
            ("d1_frequency", self.d1_frequency),
            ("fine_structure_splitting", self.fine_structure_splitting),
            ("hyperfine_splitting", self.hyperfine_splitting),
            ("gamma_d1", self.gamma_d1),
            ("gamma_d2", self.gamma_d2),
            ("d2_coupling_ratio", self.d2_coupling_ratio),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn two_i(&self) -> i32 {
        (2.0 * self.nuclear_spin).round() as i32
    }

    pub fn decay_rate(&self, level: Level) -> f64 {
        match level {
            Level::S12 => 0.0,
            Level::P12 => self.gamma_d1,
            Level::P32 => self.gamma_d2,
        }
    }

    /// Energy of a level in the frame rotating at `frame_frequency`.
    pub fn level_detuning(&self, level: Level, frame_frequency: f64) -> f64 {
        match level {
            Level::S12 => 0.0,
            Level::P12 => self.d1_frequency - frame_frequency,
            Level::P32 => self.d1_frequency + self.fine_structure_splitting - frame_frequency,
        }
    }
}

/// Product state |L_J, m_J⟩|I, m_I⟩ with projections stored doubled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisState {
    pub level: Level,
    pub two_mj: i32,
    pub two_mi: i32,
}

impl BasisState {
    pub fn new(level: Level, m_j: f64, m_i: f64, nuclear_spin: f64) -> Result<Self> {
        let two_mj = HalfInt::from_f64(m_j)?.twice();
        let two_mi = HalfInt::from_f64(m_i)?.twice();
        let two_i = HalfInt::from_f64(nuclear_spin)?.twice();
        Self::from_twice(level, two_mj, two_mi, two_i)
    }

    pub fn from_twice(level: Level, two_mj: i32, two_mi: i32, two_i: i32) -> Result<Self> {
        if two_mj.abs() > level.two_j() || (level.two_j() - two_mj) % 2 != 0 {
            return Err(Error::param(format!(
                "m_J = {}/2 invalid for {}",
                two_mj,
                level.label()
            )));
        }
        if two_mi.abs() > two_i || (two_i - two_mi) % 2 != 0 {
            return Err(Error::param(format!("m_I = {two_mi}/2 invalid for 2I = {two_i}")));
        }
        Ok(Self {
            level,
            two_mj,
            two_mi,
        })
    }

    pub fn m_j(&self) -> f64 {
        self.two_mj as f64 / 2.0
    }

    pub fn m_i(&self) -> f64 {
        self.two_mi as f64 / 2.0
    }

    pub fn two_mf(&self) -> i32 {
        self.two_mj + self.two_mi
    }

    /// Compact identifier such as `S12_mJ-1/2_mI+1/2`, safe for CSV headers.
    pub fn label(&self) -> String {
        let level = match self.level {
            Level::S12 => "S12",
            Level::P12 => "P12",
            Level::P32 => "P32",
        };
        format!("{level}_mJ{:+}/2_mI{:+}/2", self.two_mj, self.two_mi)
    }
}

/// Ground hyperfine state |S½, F, m_F⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperfineState {
    pub two_f: i32,
    pub two_mf: i32,
}

impl HyperfineState {
    pub fn new(nuclear_spin: f64, f: f64, m_f: f64) -> Result<Self> {
        let two_i = HalfInt::from_f64(nuclear_spin)?.twice();
        let two_f = HalfInt::from_f64(f)?.twice();
        let two_mf = HalfInt::from_f64(m_f)?.twice();
        if two_f != two_i + 1 && two_f != two_i - 1 || two_f < 0 {
            return Err(Error::param(format!("F = {f} is not I ± 1/2 for I = {nuclear_spin}")));
        }
        if two_mf.abs() > two_f || (two_f - two_mf) % 2 != 0 {
            return Err(Error::param(format!("m_F = {m_f} invalid for F = {f}")));
        }
        Ok(Self { two_f, two_mf })
    }
}

/// Expansion of |S½, F, m_F⟩ over |m_J⟩|m_I⟩ with Condon–Shortley coefficients.
///
/// Entries are `(m_J, m_I, coefficient)` with non-zero coefficients, ordered by
/// descending m_J.
pub fn hyperfine_decomposition(nuclear_spin: f64, f: f64, m_f: f64) -> Result<Vec<(f64, f64, f64)>> {
    let state = HyperfineState::new(nuclear_spin, f, m_f)?;
    let two_i = (2.0 * nuclear_spin).round() as i32;
    Ok(decompose_twice(two_i, state)
        .into_iter()
        .map(|(tmj, tmi, c)| (tmj as f64 / 2.0, tmi as f64 / 2.0, c))
        .collect())
}

pub(crate) fn decompose_twice(two_i: i32, state: HyperfineState) -> Vec<(i32, i32, f64)> {
    [1, -1]
        .into_iter()
        .filter_map(|tmj| {
            let tmi = state.two_mf - tmj;
            if tmi.abs() > two_i {
                return None;
            }
            let c = cg_twice(1, tmj, two_i, tmi, state.two_f, state.two_mf);
            (c != 0.0).then_some((tmj, tmi, c))
        })
        .collect()
}

/// Qubit basis of the `m_F` manifold as ground-state expansions.
///
/// `|0⟩ = |F = I+½, m_F⟩` and `|1⟩ = |F = I-½, m_F⟩` with Condon–Shortley
/// coefficients in the electron-first coupling order `J ⊗ I`, so that
/// `(|0⟩ ± |1⟩)/√2` are the `m_J = ±½` states for `m_F = 0`. Stretched
/// manifolds have only `|0⟩`.
pub fn qubit_basis(nuclear_spin: f64, m_f: f64) -> Result<Vec<Vec<(BasisState, f64)>>> {
    let two_i = HalfInt::from_f64(nuclear_spin)?.twice();
    let two_mf = HalfInt::from_f64(m_f)?.twice();
    let mut out = Vec::new();
    for two_f in [two_i + 1, two_i - 1] {
        let Ok(state) = HyperfineState::new(nuclear_spin, two_f as f64 / 2.0, m_f) else {
            continue;
        };
        out.push(
            decompose_twice(two_i, state)
                .into_iter()
                .map(|(tmj, tmi, c)| {
                    (
                        BasisState {
                            level: Level::S12,
                            two_mj: tmj,
                            two_mi: tmi,
                        },
                        c,
                    )
                })
                .collect(),
        );
    }
    if out.is_empty() {
        return Err(Error::param(format!("m_F = {} has no ground states", two_mf as f64 / 2.0)));
    }
    Ok(out)
}

/// Relative dipole factor ⟨J', m_J+q| d_q |S½, m_J⟩ for any q ∈ {-1, 0, 1}.
///
/// The angular part is the J-basis Clebsch–Gordan coefficient; the radial part
/// scales as `r(J')/√(2J'+1)` with `r = 1` for D1 and `d2_coupling_ratio` for D2.
/// Normalized so that ⟨P½, +½| d₊ |S½, -½⟩ = 1.
pub fn dipole_factor(atom: &AtomSpec, q: i32, two_mj: i32, excited: Level) -> f64 {
    if !excited.is_excited() || !(-1..=1).contains(&q) || two_mj.abs() != 1 {
        return 0.0;
    }
    let two_j = excited.two_j();
    let radial = |level: Level| match level {
        Level::P32 => atom.d2_coupling_ratio / 2.0,
        _ => 1.0 / std::f64::consts::SQRT_2,
    };
    let anchor = cg_twice(1, -1, 2, 2, 1, 1) * radial(Level::P12);
    cg_twice(1, two_mj, 2, 2 * q, two_j, two_mj + 2 * q) * radial(excited) / anchor
}

/// Relative coupling strength for circular light driving S½, m_J → excited, m_J + q.
pub fn sigma_coupling(atom: &AtomSpec, component: Circular, m_j: f64, excited: Level) -> f64 {
    let two_mj = (2.0 * m_j).round() as i32;
    dipole_factor(atom, component.q(), two_mj, excited)
}

/// Branching ratio of `excited` decaying into ground `S½, m_J'` (m_I unchanged).
pub fn branching_ratio(atom: &AtomSpec, excited: BasisState, two_mj_ground: i32) -> f64 {
    let weight = |tmj: i32| {
        let q2 = excited.two_mj - tmj;
        if q2 % 2 != 0 {
            return 0.0;
        }
        dipole_factor(atom, q2 / 2, tmj, excited.level).powi(2)
    };
    let total: f64 = [1, -1].into_iter().map(weight).sum();
    if total == 0.0 {
        return 0.0;
    }
    weight(two_mj_ground) / total
}
