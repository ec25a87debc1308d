//! Two-level adiabatic-passage diagnostics.

use crate::pulse::TimeDomainParams;

/// Adiabaticity parameter `|dϑ/dt| / (ε₊ - ε₋)` of a single chirped pulse at
/// time `s` from its centre. Values well below 1 mean adiabatic following.
///
/// Returns `+∞` where the gap closes (zero Rabi frequency at the resonance).
pub fn adiabaticity(params: &TimeDomainParams, peak_rabi: f64, s: f64) -> f64 {
    let gamma = params.chirp_rate.abs();
    if gamma == 0.0 {
        return 0.0;
    }
    let x = s / params.duration;
    let omega = peak_rabi.abs() * (-x * x).exp();
    let gap2 = omega * omega + 4.0 * gamma * gamma * s * s;
    if gap2 == 0.0 {
        return f64::INFINITY;
    }
    gamma * omega * (2.0 * x * x + 1.0) / gap2.powf(1.5)
}

/// Eigen-decomposition of `H = ½ [[-Δ, Ω], [Ω, Δ]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigensystem {
    /// ϑ with `tan 2ϑ = Ω/Δ`, in `[0, π/2]`; `None` when Ω = Δ = 0.
    pub mixing_angle: Option<f64>,
    pub energy_plus: f64,
    pub energy_minus: f64,
}

impl Eigensystem {
    /// `|+⟩ = sin ϑ |g⟩ + cos ϑ |e⟩` and `|-⟩ = cos ϑ |g⟩ - sin ϑ |e⟩`.
    pub fn eigenvectors(&self) -> Option<([f64; 2], [f64; 2])> {
        let (s, c) = self.mixing_angle?.sin_cos();
        Some(([s, c], [c, -s]))
    }
}

pub fn instantaneous_eigensystem(omega: f64, delta: f64) -> Eigensystem {
    let r = omega.hypot(delta);
    let mixing_angle = (r > 0.0).then(|| 0.5 * omega.abs().atan2(delta));
    Eigensystem {
        mixing_angle,
        energy_plus: 0.5 * r,
        energy_minus: -0.5 * r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::peak_rabi;
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    fn fig_params() -> TimeDomainParams {
        TimeDomainParams::from_spectrum(TAU * 4.0, 0.072).unwrap()
    }

    #[test]
    fn centre_value() {
        let p = fig_params();
        let o = peak_rabi(6.0 * PI, p.duration).unwrap();
        let eta = adiabaticity(&p, o, 0.0);
        assert!((eta - p.chirp_rate / (o * o)).abs() < 1e-15);
        assert!((eta - 0.20).abs() < 0.01);
    }

    #[test]
    fn matches_mixing_angle_derivative() {
        let p = fig_params();
        let o0 = peak_rabi(6.0 * PI, p.duration).unwrap();
        let theta = |s: f64| {
            let x = s / p.duration;
            instantaneous_eigensystem(o0 * (-x * x).exp(), 2.0 * p.chirp_rate * s)
                .mixing_angle
                .unwrap()
        };
        for k in -20..=20 {
            let s = 0.173 * k as f64 + 0.01;
            let h = 1e-5;
            let dtheta = (theta(s + h) - theta(s - h)) / (2.0 * h);
            let x = s / p.duration;
            let gap = (o0 * o0 * (-2.0 * x * x).exp() + 4.0 * p.chirp_rate.powi(2) * s * s).sqrt();
            let expected = dtheta.abs() / gap;
            assert!((adiabaticity(&p, o0, s) - expected).abs() < 1e-7 * expected.max(1e-3));
        }
    }

    #[test]
    fn limits() {
        let p = fig_params();
        assert!(adiabaticity(&p, 1e6, 0.0) < 1e-10);
        let flat = TimeDomainParams::from_spectrum(10.0, 0.0).unwrap();
        assert_eq!(adiabaticity(&flat, 3.0, 0.4), 0.0);
        assert_eq!(adiabaticity(&p, 0.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn eigensystem_cases() {
        let e = instantaneous_eigensystem(2.0, 0.0);
        assert!((e.mixing_angle.unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!((e.energy_plus, e.energy_minus), (1.0, -1.0));
        assert_eq!(instantaneous_eigensystem(0.0, 3.0).mixing_angle, Some(0.0));
        assert!(instantaneous_eigensystem(0.0, 0.0).mixing_angle.is_none());
    }
}
