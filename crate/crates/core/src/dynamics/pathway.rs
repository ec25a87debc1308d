use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::hamiltonian::HamiltonianModel;
use super::propagate::{propagate_schrodinger, PropagationConfig};
use crate::{Error, Result, C64};

/// Ground-return population below which a pathway is declared non-cyclic.
pub const DEFAULT_CYCLIC_THRESHOLD: f64 = 0.99;

/// Phases gained by the two ground fine-structure states over a cyclic drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathwayPhases {
    /// Phase of the σ⁻-driven `m_J = +½` pathway.
    pub phi_plus: f64,
    /// Phase of the σ⁺-driven `m_J = -½` pathway.
    pub phi_minus: f64,
    pub return_plus: f64,
    pub return_minus: f64,
}

impl PathwayPhases {
    /// `φ₋ - φ₊` wrapped to `(-π, π]`.
    pub fn relative(&self) -> f64 {
        wrap_pi(self.phi_minus - self.phi_plus)
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let y = x.rem_euclid(std::f64::consts::TAU);
    if y > std::f64::consts::PI {
        y - std::f64::consts::TAU
    } else {
        y
    }
}

/// Propagates each seed ground state of `model` alone and returns the phase of
/// its returned amplitude.
pub fn pathway_phases(
    model: &HamiltonianModel,
    config: &PropagationConfig,
    threshold: f64,
) -> Result<PathwayPhases> {
    let seed = |two_mj: i32| {
        model
            .seed_states()
            .iter()
            .find(|s| s.two_mj == two_mj && !s.level.is_excited())
            .and_then(|s| model.index_of(s))
            .ok_or_else(|| Error::param("model has no ground pair to compare"))
    };
    let run = |idx: usize| -> Result<C64> {
        let mut psi = DVector::from_element(model.dim(), C64::new(0.0, 0.0));
        psi[idx] = C64::new(1.0, 0.0);
        let out = propagate_schrodinger(model, &psi, config)?;
        let amp = out.state[idx];
        if amp.norm_sqr() < threshold {
            return Err(Error::NonCyclic {
                population: amp.norm_sqr(),
                threshold,
            });
        }
        Ok(amp)
    };
    let plus = run(seed(1)?)?;
    let minus = run(seed(-1)?)?;
    Ok(PathwayPhases {
        phi_plus: plus.arg(),
        phi_minus: minus.arg(),
        return_plus: plus.norm_sqr(),
        return_minus: minus.norm_sqr(),
    })
}
