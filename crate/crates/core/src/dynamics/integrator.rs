//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 8(5,3)) on complex vectors.

use super::tableau::{A, B, C, E3, E5, STAGES};
use crate::{Error, Result, C64};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;
const MAX_STEPS: usize = 5_000_000;

/// Step-size control settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

/// Counters reported after a successful integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Right-hand side `dy = f(t, y)`.
pub trait System {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

impl<F: Fn(f64, &[C64], &mut [C64])> System for F {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        self(t, y, dy)
    }
}

/// Dormand–Prince 8(5,3) stepper with FSAL reuse and stop points.
pub struct Dop853<'a, S: System> {
    system: &'a S,
    control: StepControl,
    k: Vec<Vec<C64>>,
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    f_new: Vec<C64>,
    pub stats: IntegrationStats,
}

impl<'a, S: System> Dop853<'a, S> {
    pub fn new(system: &'a S, dim: usize, control: StepControl) -> Result<Self> {
        if !(control.rel_tol > 0.0) || !(control.abs_tol > 0.0) {
            return Err(Error::param("tolerances must be positive"));
        }
        if !(control.max_step > 0.0) {
            return Err(Error::param("max_step must be positive"));
        }
        Ok(Self {
            system,
            control,
            k: vec![vec![C64::new(0.0, 0.0); dim]; STAGES + 1],
            y_stage: vec![C64::new(0.0, 0.0); dim],
            y_new: vec![C64::new(0.0, 0.0); dim],
            f_new: vec![C64::new(0.0, 0.0); dim],
            stats: IntegrationStats::default(),
        })
    }

    fn eval(&mut self, t: f64, which: Which) {
        self.stats.evaluations += 1;
        match which {
            Which::Stage(i) => self.system.rhs(t, &self.y_stage, &mut self.k[i]),
            Which::New => self.system.rhs(t, &self.y_new, &mut self.f_new),
        }
    }

    fn initial_step(&mut self, t0: f64, y0: &[C64], direction: f64) -> f64 {
        let StepControl {
            rel_tol, abs_tol, ..
        } = self.control;
        let n = y0.len() as f64;
        let rms = |v: &mut dyn Iterator<Item = f64>| (v.sum::<f64>() / n).sqrt();
        let scale: Vec<f64> = y0.iter().map(|y| abs_tol + y.norm() * rel_tol).collect();
        let d0 = rms(&mut y0.iter().zip(&scale).map(|(y, s)| (y.norm() / s).powi(2)));
        let d1 = rms(&mut self.k[0].iter().zip(&scale).map(|(f, s)| (f.norm() / s).powi(2)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.control.max_step);
        for i in 0..y0.len() {
            self.y_stage[i] = y0[i] + self.k[0][i] * (direction * h0);
        }
        self.eval(t0 + direction * h0, Which::Stage(1));
        let d2 = rms(&mut self.k[1]
            .iter()
            .zip(&self.k[0])
            .zip(&scale)
            .map(|((f1, f0), s)| ((f1 - f0).norm() / s).powi(2)))
            / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(self.control.max_step)
    }

    /// Integrates `y` from `t0` to `t_end`, stopping exactly at every time in
    /// `stops` (sorted, inside the interval) and calling `observe` there.
    pub fn integrate(
        &mut self,
        t0: f64,
        t_end: f64,
        y: &mut [C64],
        stops: &[f64],
        mut observe: impl FnMut(f64, &mut [C64]),
        mut post_step: impl FnMut(&mut [C64]),
    ) -> Result<()> {
        if t_end == t0 {
            return Ok(());
        }
        if t_end < t0 {
            return Err(Error::param("backward integration is not supported"));
        }
        let dim = y.len();
        let StepControl {
            rel_tol,
            abs_tol,
            max_step,
        } = self.control;
        let mut t = t0;
        self.y_stage.copy_from_slice(y);
        self.eval(t, Which::Stage(0));
        let mut h = self.initial_step(t0, y, 1.0);
        let mut next_stop = stops.iter().copied().filter(|&s| s > t0 && s < t_end).peekable();
        let mut step_rejected = false;
        let mut steps = 0usize;

        while t < t_end {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Integration {
                    t,
                    step: h,
                    accepted: self.stats.accepted,
                    reason: "maximum number of steps exceeded".into(),
                });
            }
            let min_step = 10.0 * f64::EPSILON * t.abs().max(1.0);
            let target = next_stop.peek().copied().unwrap_or(t_end);
            let mut h_try = h.min(max_step).max(min_step);
            let mut hits_target = false;
            if t + h_try >= target {
                h_try = target - t;
                hits_target = true;
            }

            // Stages.
            for s in 1..STAGES {
                for i in 0..dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * *a;
                        }
                    }
                    self.y_stage[i] = y[i] + acc * h_try;
                }
                self.eval(t + C[s] * h_try, Which::Stage(s));
            }
            for i in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for (j, b) in B.iter().enumerate() {
                    if *b != 0.0 {
                        acc += self.k[j][i] * *b;
                    }
                }
                self.y_new[i] = y[i] + acc * h_try;
            }
            let t_new = if hits_target { target } else { t + h_try };
            self.eval(t_new, Which::New);

            // Error norm.
            let mut e5 = 0.0;
            let mut e3 = 0.0;
            for i in 0..dim {
                let scale = abs_tol + y[i].norm().max(self.y_new[i].norm()) * rel_tol;
                let mut a5 = C64::new(0.0, 0.0);
                let mut a3 = C64::new(0.0, 0.0);
                for j in 0..STAGES {
                    if E5[j] != 0.0 {
                        a5 += self.k[j][i] * E5[j];
                    }
                    if E3[j] != 0.0 {
                        a3 += self.k[j][i] * E3[j];
                    }
                }
                e5 += (a5 / scale).norm_sqr();
                e3 += (a3 / scale).norm_sqr();
            }
            let denom = e5 + 0.01 * e3;
            let err = if denom > 0.0 {
                h_try * e5 / (denom * dim as f64).sqrt()
            } else {
                0.0
            };
            if !err.is_finite() {
                return Err(Error::Integration {
                    t,
                    step: h_try,
                    accepted: self.stats.accepted,
                    reason: "non-finite error estimate".into(),
                });
            }

            if err < 1.0 {
                let mut factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    MAX_FACTOR.min(SAFETY * err.powf(ERROR_EXPONENT))
                };
                if step_rejected {
                    factor = factor.min(1.0);
                }
                if !hits_target || h_try >= h {
                    h = h_try * factor;
                } else {
                    // A shortened step to a stop point says little about the next step size.
                    h = h.max(h_try * factor);
                }
                step_rejected = false;
                self.stats.accepted += 1;
                t = t_new;
                y.copy_from_slice(&self.y_new);
                post_step(y);
                self.k[0].copy_from_slice(&self.f_new);
                if hits_target {
                    if next_stop.peek().is_some() && target < t_end {
                        next_stop.next();
                        observe(t, y);
                    }
                    if t >= t_end {
                        break;
                    }
                }
                if self.y_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(Error::Integration {
                        t,
                        step: h_try,
                        accepted: self.stats.accepted,
                        reason: "state became non-finite".into(),
                    });
                }
            } else {
                self.stats.rejected += 1;
                h = h_try * MIN_FACTOR.max(SAFETY * err.powf(ERROR_EXPONENT));
                step_rejected = true;
                if h < min_step {
                    return Err(Error::Integration {
                        t,
                        step: h,
                        accepted: self.stats.accepted,
                        reason: "step size underflow".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Which {
    Stage(usize),
    New,
}
