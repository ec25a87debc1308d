//! Linearly chirped Gaussian pulses and their circular-polarization content.
//!
//! A pulse is specified in the frequency domain by
//! `E(δ) ∝ exp(-δ²/Δω_p²) · exp(i c_p δ²/2)` with `δ = ω - ω_p` and
//! `E(t) = ∫ E(δ) e^{iδt} dδ`. Its time-domain
//! envelope is a Gaussian of 1/e half-width `Δt_p` whose phase is
//! `Γ_p (t-t₀)² + φ_p`, so the instantaneous frequency is `ω_p + 2Γ_p (t-t₀)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Default half-width multiplier used to bound the integration window.
pub const DEFAULT_WINDOW_MULTIPLIER: f64 = 5.0;

/// Circular polarization component. `Plus` (R̂) drives σ⁺, `Minus` (L̂) drives σ⁻.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Circular {
    Plus,
    Minus,
}

impl Circular {
    /// Change of m_J induced by absorbing this component.
    pub fn q(self) -> i32 {
        match self {
            Circular::Plus => 1,
            Circular::Minus => -1,
        }
    }

    pub fn sign(self) -> f64 {
        self.q() as f64
    }

    pub fn from_q(q: i32) -> Option<Self> {
        match q {
            1 => Some(Circular::Plus),
            -1 => Some(Circular::Minus),
            _ => None,
        }
    }
}

/// Linear polarization axis (angle from x̂) plus an ellipticity imperfection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationState {
    pub angle: f64,
    pub ellipticity: f64,
}

impl PolarizationState {
    pub fn linear(angle: f64) -> Self {
        Self {
            angle,
            ellipticity: 0.0,
        }
    }

    pub fn new(angle: f64, ellipticity: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::param("polarization angle must be finite"));
        }
        if !(-1.0..=1.0).contains(&ellipticity) {
            return Err(Error::param(format!(
                "ellipticity {ellipticity} outside [-1, 1]"
            )));
        }
        Ok(Self { angle, ellipticity })
    }

    /// Complex amplitude of one circular component relative to the linear field.
    ///
    /// At zero ellipticity both components have unit magnitude and phases
    /// `e^{∓iθ}`; otherwise `|E⁺|/|E⁻| = (1+ε)/(1-ε)` with the summed intensity
    /// of the two components held fixed.
    pub fn circular_factor(&self, component: Circular) -> C64 {
        let eps = self.ellipticity;
        let norm = (((1.0 + eps).powi(2) + (1.0 - eps).powi(2)) / 2.0).sqrt();
        let s = component.sign();
        C64::from_polar((1.0 + s * eps) / norm, -s * self.angle)
    }
}

/// How a quoted spectral width maps onto the 1/e field half-width `Δω_p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralWidthConvention {
    /// The quoted value already is `Δω_p`.
    #[serde(rename = "half_width_1e")]
    HalfWidth1e,
    /// Full width at half maximum of the spectral field amplitude `|E(ω)|`.
    #[default]
    AmplitudeFwhm,
    /// Full width at half maximum of the spectral intensity `|E(ω)|²`.
    IntensityFwhm,
}

impl SpectralWidthConvention {
    pub fn to_half_width(self, width: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        match self {
            SpectralWidthConvention::HalfWidth1e => width,
            SpectralWidthConvention::AmplitudeFwhm => width / (2.0 * ln2.sqrt()),
            SpectralWidthConvention::IntensityFwhm => width / (2.0 * ln2).sqrt(),
        }
    }

    pub fn from_half_width(self, half_width: f64) -> f64 {
        half_width / self.to_half_width(1.0)
    }
}

/// One chirped Gaussian pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChirpedPulseSpec {
    /// ω_p, rad/ps.
    pub carrier_frequency: f64,
    /// Δω_p, 1/e half-width of the spectral field amplitude, rad/ps.
    pub spectral_width: f64,
    /// c_p, ps².
    pub chirp: f64,
    pub polarization: PolarizationState,
    /// t₀, ps.
    pub arrival_time: f64,
    /// Time integral of the Rabi envelope of one circular component, rad.
    pub area: f64,
    /// Extra carrier phase added to both circular components, rad.
    #[serde(default)]
    pub phase_offset: f64,
}

impl ChirpedPulseSpec {
    pub fn new(
        carrier_frequency: f64,
        spectral_width: f64,
        chirp: f64,
        polarization: PolarizationState,
        arrival_time: f64,
        area: f64,
    ) -> Result<Self> {
        let spec = Self {
            carrier_frequency,
            spectral_width,
            chirp,
            polarization,
            arrival_time,
            area,
            phase_offset: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_phase_offset(mut self, phase: f64) -> Self {
        self.phase_offset = phase;
        self
    }

    pub fn with_arrival_time(mut self, t0: f64) -> Self {
        self.arrival_time = t0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.carrier_frequency,
            self.spectral_width,
            self.chirp,
            self.arrival_time,
            self.area,
            self.phase_offset,
            self.polarization.angle,
            self.polarization.ellipticity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("pulse parameters must be finite"));
        }
        if self.spectral_width <= 0.0 {
            return Err(Error::param(format!(
                "spectral width must be positive, got {}",
                self.spectral_width
            )));
        }
        if self.area < 0.0 {
            return Err(Error::param(format!(
                "pulse area must be non-negative, got {}",
                self.area
            )));
        }
        PolarizationState::new(self.polarization.angle, self.polarization.ellipticity)?;
        Ok(())
    }

    pub fn time_params(&self) -> Result<TimeDomainParams> {
        derive_time_params(self)
    }
}

/// Time-domain parameters of a chirped Gaussian pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeDomainParams {
    /// Δt_p, 1/e half-width of the field envelope, ps.
    pub duration: f64,
    /// Γ_p, rad/ps²; the instantaneous frequency moves at 2Γ_p.
    pub chirp_rate: f64,
    /// φ_p, rad.
    pub phase: f64,
}

impl TimeDomainParams {
    pub fn from_spectrum(spectral_width: f64, chirp: f64) -> Result<Self> {
        if !(spectral_width > 0.0) || !spectral_width.is_finite() {
            return Err(Error::param(format!(
                "spectral width must be positive, got {spectral_width}"
            )));
        }
        if !chirp.is_finite() {
            return Err(Error::param("chirp must be finite"));
        }
        let w2 = spectral_width * spectral_width;
        let duration = (4.0 / w2 + chirp * chirp * w2).sqrt();
        let chirp_rate = chirp / (2.0 * chirp * chirp + 8.0 / (w2 * w2));
        let phase = -(chirp * w2 / 2.0).atan() / 2.0;
        Ok(Self {
            duration,
            chirp_rate,
            phase,
        })
    }
}

pub fn derive_time_params(spec: &ChirpedPulseSpec) -> Result<TimeDomainParams> {
    TimeDomainParams::from_spectrum(spec.spectral_width, spec.chirp)
}

/// Peak Rabi frequency of a Gaussian envelope `Ω₀ exp(-t²/Δt²)` with the given area.
pub fn peak_rabi(area: f64, duration: f64) -> Result<f64> {
    if area < 0.0 || !area.is_finite() {
        return Err(Error::param(format!("area must be non-negative, got {area}")));
    }
    if !(duration > 0.0) {
        return Err(Error::param(format!(
            "pulse duration must be positive, got {duration}"
        )));
    }
    Ok(area / (PI.sqrt() * duration))
}

/// Rabi amplitudes of the two circular components at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircularPair {
    pub plus: C64,
    pub minus: C64,
}

impl CircularPair {
    pub fn get(&self, component: Circular) -> C64 {
        match component {
            Circular::Plus => self.plus,
            Circular::Minus => self.minus,
        }
    }
}

/// Precomputed envelope of a pulse for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct PulseEnvelope {
    pub arrival_time: f64,
    pub params: TimeDomainParams,
    pub peak_rabi: f64,
    factor_plus: C64,
    factor_minus: C64,
}

impl PulseEnvelope {
    pub fn new(spec: &ChirpedPulseSpec) -> Result<Self> {
        spec.validate()?;
        let params = derive_time_params(spec)?;
        let peak = peak_rabi(spec.area, params.duration)?;
        let offset = C64::from_polar(1.0, -spec.phase_offset);
        Ok(Self {
            arrival_time: spec.arrival_time,
            params,
            peak_rabi: peak,
            factor_plus: spec.polarization.circular_factor(Circular::Plus) * offset,
            factor_minus: spec.polarization.circular_factor(Circular::Minus) * offset,
        })
    }

    /// Scalar envelope `Ω₀ e^{-s²/Δt²} e^{-i(Γ s² + φ)}` without polarization.
    #[inline]
    pub fn scalar(&self, t: f64) -> C64 {
        let s = t - self.arrival_time;
        let x = s / self.params.duration;
        let mag = self.peak_rabi * (-x * x).exp();
        if mag == 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(mag, -(self.params.chirp_rate * s * s + self.params.phase))
    }

    #[inline]
    pub fn evaluate(&self, t: f64) -> CircularPair {
        let e = self.scalar(t);
        CircularPair {
            plus: e * self.factor_plus,
            minus: e * self.factor_minus,
        }
    }

    pub fn factor(&self, component: Circular) -> C64 {
        match component {
            Circular::Plus => self.factor_plus,
            Circular::Minus => self.factor_minus,
        }
    }
}

/// Complex Rabi amplitude of each circular component at time `t` (carrier excluded).
pub fn complex_envelope(spec: &ChirpedPulseSpec, t: f64) -> Result<CircularPair> {
    Ok(PulseEnvelope::new(spec)?.evaluate(t))
}

/// Time-ordered pulses plus the pair delays they were built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pulses: Vec<ChirpedPulseSpec>,
    /// τ, ps.
    pub intra_pair_delay: f64,
    /// T, ps.
    pub inter_pair_delay: f64,
}

impl PulseSequence {
    pub fn new(
        mut pulses: Vec<ChirpedPulseSpec>,
        intra_pair_delay: f64,
        inter_pair_delay: f64,
    ) -> Result<Self> {
        if intra_pair_delay < 0.0 || inter_pair_delay < 0.0 {
            return Err(Error::param("pulse delays must be non-negative"));
        }
        for p in &pulses {
            p.validate()?;
        }
        pulses.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
        Ok(Self {
            pulses,
            intra_pair_delay,
            inter_pair_delay,
        })
    }

    pub fn single(pulse: ChirpedPulseSpec) -> Result<Self> {
        Self::new(vec![pulse], 0.0, 0.0)
    }

    /// Two pulses centred at `∓τ/2`.
    pub fn pair(first: ChirpedPulseSpec, second: ChirpedPulseSpec, tau: f64) -> Result<Self> {
        if tau < 0.0 {
            return Err(Error::param("intra-pair delay must be non-negative"));
        }
        Self::new(
            vec![
                first.with_arrival_time(-tau / 2.0),
                second.with_arrival_time(tau / 2.0),
            ],
            tau,
            0.0,
        )
    }

    pub fn pulses(&self) -> &[ChirpedPulseSpec] {
        &self.pulses
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }
}

/// Time span `[first arrival - kΔt, last arrival + kΔt]` using the longest pulse.
pub fn integration_window(seq: &PulseSequence, k: f64) -> Result<(f64, f64)> {
    if !(k > 0.0) {
        return Err(Error::param(format!("window multiplier must be positive, got {k}")));
    }
    let first = seq
        .pulses
        .first()
        .ok_or_else(|| Error::param("empty pulse sequence"))?;
    let last = seq.pulses.last().expect("non-empty");
    let mut longest: f64 = 0.0;
    for p in &seq.pulses {
        longest = longest.max(derive_time_params(p)?.duration);
    }
    Ok((
        first.arrival_time - k * longest,
        last.arrival_time + k * longest,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn fig_pulse(chirp: f64) -> ChirpedPulseSpec {
        ChirpedPulseSpec::new(0.0, TAU * 4.0, chirp, PolarizationState::linear(0.0), 0.0, 6.0 * PI)
            .unwrap()
    }

    #[test]
    fn time_params_reference_values() {
        let p = derive_time_params(&fig_pulse(0.072)).unwrap();
        assert!((p.duration - 1.811).abs() < 5e-4, "{}", p.duration);
        assert!((p.chirp_rate - 6.93).abs() < 5e-3, "{}", p.chirp_rate);
        assert!((p.phase + 0.763).abs() < 5e-4, "{}", p.phase);
    }

    #[test]
    fn unchirped_limit() {
        for w in [0.5, 3.0, 25.0] {
            let p = TimeDomainParams::from_spectrum(w, 0.0).unwrap();
            assert_relative_eq!(p.duration, 2.0 / w, max_relative = 1e-15);
            assert_eq!(p.chirp_rate, 0.0);
            assert_eq!(p.phase, 0.0);
        }
    }

    #[test]
    fn chirp_sign_is_odd() {
        let a = derive_time_params(&fig_pulse(0.072)).unwrap();
        let b = derive_time_params(&fig_pulse(-0.072)).unwrap();
        assert_eq!(a.duration, b.duration);
        assert_eq!(a.chirp_rate, -b.chirp_rate);
        assert_eq!(a.phase, -b.phase);
    }

    #[test]
    fn nonpositive_width_rejected() {
        assert!(TimeDomainParams::from_spectrum(0.0, 0.1).is_err());
        assert!(TimeDomainParams::from_spectrum(-1.0, 0.1).is_err());
        let mut p = fig_pulse(0.0);
        p.spectral_width = 0.0;
        assert!(derive_time_params(&p).is_err());
    }

    #[test]
    fn peak_rabi_values() {
        let o = peak_rabi(6.0 * PI, 1.811).unwrap();
        assert!((o - 5.87).abs() < 5e-3, "{o}");
        assert_eq!(peak_rabi(0.0, 1.811).unwrap(), 0.0);
        assert_relative_eq!(peak_rabi(12.0 * PI, 1.811).unwrap(), 2.0 * o, max_relative = 1e-15);
        assert!(peak_rabi(-1.0, 1.0).is_err());
        assert!(peak_rabi(1.0, 0.0).is_err());
    }

    #[test]
    fn envelope_peak_and_one_over_e() {
        let spec = fig_pulse(0.072);
        let p = derive_time_params(&spec).unwrap();
        let o0 = peak_rabi(spec.area, p.duration).unwrap();
        let at0 = complex_envelope(&spec, 0.0).unwrap();
        assert_relative_eq!(at0.plus.norm(), o0, max_relative = 1e-14);
        assert_relative_eq!(at0.minus.norm(), o0, max_relative = 1e-14);
        assert_relative_eq!(at0.plus.arg(), -p.phase, max_relative = 1e-12);
        for t in [p.duration, -p.duration] {
            let e = complex_envelope(&spec, t).unwrap();
            assert_relative_eq!(e.plus.norm(), o0 / std::f64::consts::E, max_relative = 1e-12);
        }
    }

    #[test]
    fn ellipticity_ratio() {
        let pol = PolarizationState::new(0.0, 1.0 / 7.0).unwrap();
        let r = pol.circular_factor(Circular::Plus).norm() / pol.circular_factor(Circular::Minus).norm();
        assert_relative_eq!(r, 4.0 / 3.0, max_relative = 1e-14);
        let lin = PolarizationState::linear(0.3);
        assert_relative_eq!(lin.circular_factor(Circular::Plus).arg(), -0.3);
        assert_relative_eq!(lin.circular_factor(Circular::Minus).arg(), 0.3);
        assert!(PolarizationState::new(0.0, 1.5).is_err());
    }

    #[test]
    fn windows() {
        let single = PulseSequence::single(fig_pulse(0.072)).unwrap();
        let (a, b) = integration_window(&single, 5.0).unwrap();
        assert!((a + 9.06).abs() < 5e-3 && (b - 9.06).abs() < 5e-3, "{a} {b}");
        let pair = PulseSequence::pair(fig_pulse(0.072), fig_pulse(0.072), 6.7).unwrap();
        let (a, b) = integration_window(&pair, 5.0).unwrap();
        assert!((a + 12.41).abs() < 5e-3 && (b - 12.41).abs() < 5e-3, "{a} {b}");
        assert!(integration_window(&pair, 0.0).is_err());
        let empty = PulseSequence::new(vec![], 0.0, 0.0).unwrap();
        assert!(integration_window(&empty, 5.0).is_err());
    }

    #[test]
    fn sequence_is_time_ordered() {
        let a = fig_pulse(0.0).with_arrival_time(3.0);
        let b = fig_pulse(0.0).with_arrival_time(-1.0);
        let seq = PulseSequence::new(vec![a, b], 4.0, 0.0).unwrap();
        assert!(seq.pulses()[0].arrival_time < seq.pulses()[1].arrival_time);
        assert!(PulseSequence::new(vec![], -1.0, 0.0).is_err());
    }

    #[test]
    fn width_conventions_round_trip() {
        for c in [
            SpectralWidthConvention::HalfWidth1e,
            SpectralWidthConvention::AmplitudeFwhm,
            SpectralWidthConvention::IntensityFwhm,
        ] {
            assert_relative_eq!(c.from_half_width(c.to_half_width(7.0)), 7.0, max_relative = 1e-15);
        }
        // |E| drops to one half at the FWHM edge.
        let w = 10.0;
        let hw = SpectralWidthConvention::AmplitudeFwhm.to_half_width(w);
        assert_relative_eq!((-(w / 2.0 / hw).powi(2)).exp(), 0.5, max_relative = 1e-14);
        let hw = SpectralWidthConvention::IntensityFwhm.to_half_width(w);
        assert_relative_eq!((-2.0 * (w / 2.0 / hw).powi(2)).exp(), 0.5, max_relative = 1e-14);
    }
}
