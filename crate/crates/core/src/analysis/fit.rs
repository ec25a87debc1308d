//! Nonlinear least squares for fringe and Ramsey curves.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const MAX_ITERATIONS: usize = 200;

/// Estimates with 95% confidence half-widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    /// 95% half-widths; `None` unless the fit converged.
    pub ci95: Option<Vec<f64>>,
    /// √(Σ residual²).
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Several frequencies explained the data about equally well, or the
    /// search window did not bracket a clear optimum.
    #[serde(default)]
    pub alias_ambiguous: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.estimates[i])
    }

    pub fn ci(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        self.ci95.as_ref().map(|c| c[i])
    }
}

/// A model `y = f(x; p)` with its gradient in `p`.
pub trait CurveModel {
    fn names(&self) -> Vec<&'static str>;
    fn eval(&self, p: &[f64], x: f64, grad: &mut [f64]) -> f64;
}

/// Result of [`levenberg_marquardt`].
#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub rss: f64,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Gauss–Newton with Marquardt scaling of the normal equations.
pub fn levenberg_marquardt(
    model: &dyn CurveModel,
    xs: &[f64],
    ys: &[f64],
    p0: &[f64],
) -> LmOutcome {
    let n = xs.len();
    let m = p0.len();
    let mut grad = vec![0.0; m];
    let evaluate = |p: &[f64], grad: &mut [f64]| {
        let mut j = DMatrix::zeros(n, m);
        let mut r = DVector::zeros(n);
        for k in 0..n {
            let f = model.eval(p, xs[k], grad);
            r[k] = ys[k] - f;
            for (c, g) in grad.iter().enumerate() {
                j[(k, c)] = *g;
            }
        }
        (r, j)
    };
    let mut p = p0.to_vec();
    let (mut r, mut j) = evaluate(&p, &mut grad);
    let mut rss = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * &r;
        if jtr.amax() <= 1e-15 * (1.0 + rss) {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for d in 0..m {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let (r_new, j_new) = evaluate(&trial, &mut grad);
            let rss_new = r_new.norm_squared();
            if rss_new.is_finite() && rss_new <= rss {
                let rel_step = step.norm() / (1e-12 + DVector::from_column_slice(&p).norm());
                let rel_drop = (rss - rss_new) / rss.max(1e-300);
                p = trial;
                r = r_new;
                j = j_new;
                rss = rss_new;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel_step < 1e-12 || rel_drop < 1e-14 || rss < 1e-28 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No descent direction left: at a (numerically) stationary point.
            converged = jtr.amax() <= 1e-8 * (1.0 + rss.sqrt());
            break;
        }
        if converged {
            break;
        }
    }
    LmOutcome {
        params: p,
        rss,
        jacobian: j,
        iterations,
        converged,
    }
}

/// 95% half-widths from `σ² (JᵀJ)⁻¹` with `σ² = RSS/(n - p)`.
pub fn confidence_halfwidths(jacobian: &DMatrix<f64>, rss: f64) -> Option<Vec<f64>> {
    let (n, m) = jacobian.shape();
    if n <= m {
        return None;
    }
    let sigma2 = rss / (n - m) as f64;
    let cov = (jacobian.transpose() * jacobian).try_inverse()?;
    Some((0..m).map(|i| Z95 * (sigma2 * cov[(i, i)].max(0.0)).sqrt()).collect())
}

fn finish(model_name: &str, model: &dyn CurveModel, lm: LmOutcome, alias: bool) -> FitResult {
    let ci95 = if lm.converged {
        confidence_halfwidths(&lm.jacobian, lm.rss)
    } else {
        None
    };
    FitResult {
        model: model_name.into(),
        names: model.names().into_iter().map(String::from).collect(),
        estimates: lm.params,
        converged: lm.converged && ci95.is_some(),
        ci95,
        residual_norm: lm.rss.sqrt(),
        iterations: lm.iterations,
        alias_ambiguous: alias,
    }
}

/// `P(θ) = γ sin²(θ + Δθ) + δ`.
#[derive(Clone, Copy, Debug, Default)]
pub struct FringeModel;

impl CurveModel for FringeModel {
    fn names(&self) -> Vec<&'static str> {
        vec!["gamma", "delta_theta", "delta"]
    }

    fn eval(&self, p: &[f64], x: f64, grad: &mut [f64]) -> f64 {
        let (s, c) = (x + p[1]).sin_cos();
        grad[0] = s * s;
        grad[1] = 2.0 * p[0] * s * c;
        grad[2] = 1.0;
        p[0] * s * s + p[2]
    }
}

pub fn fringe_model(gamma: f64, delta_theta: f64, delta: f64, theta: f64) -> f64 {
    gamma * (theta + delta_theta).sin().powi(2) + delta
}

/// `P(ΔT) = γ_R sin(2θ) cos²(π f_R ΔT + φ_R) + δ_R` with θ fixed.
#[derive(Clone, Copy, Debug)]
pub struct RamseyModel {
    pub theta: f64,
}

impl CurveModel for RamseyModel {
    fn names(&self) -> Vec<&'static str> {
        vec!["gamma_r", "f_r", "phi_r", "delta_r"]
    }

    fn eval(&self, p: &[f64], x: f64, grad: &mut [f64]) -> f64 {
        let amp = (2.0 * self.theta).sin();
        let arg = PI * p[1] * x + p[2];
        let (s, c) = arg.sin_cos();
        grad[0] = amp * c * c;
        let d = -2.0 * p[0] * amp * c * s;
        grad[1] = d * PI * x;
        grad[2] = d;
        grad[3] = 1.0;
        p[0] * amp * c * c + p[3]
    }
}

pub fn ramsey_model(p: &[f64; 4], theta: f64, delay: f64) -> f64 {
    p[0] * (2.0 * theta).sin() * (PI * p[1] * delay + p[2]).cos().powi(2) + p[3]
}

/// Least-squares coefficients of `y ≈ a + b cos(ωx) + c sin(ωx)` and the RSS.
fn linear_harmonic(xs: &[f64], ys: &[f64], omega: f64) -> Option<([f64; 3], f64)> {
    let a = DMatrix::from_fn(xs.len(), 3, |k, c| match c {
        0 => 1.0,
        1 => (omega * xs[k]).cos(),
        _ => (omega * xs[k]).sin(),
    });
    let y = DVector::from_column_slice(ys);
    let sol = a.clone().svd(true, true).solve(&y, 1e-12).ok()?;
    let rss = (&a * &sol - y).norm_squared();
    Some(([sol[0], sol[1], sol[2]], rss))
}

fn check_samples(xs: &[f64], ys: &[f64], min: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Fit("x and y have different lengths".into()));
    }
    if xs.len() < min {
        return Err(Error::Fit(format!("need at least {min} samples, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("samples must be finite".into()));
    }
    Ok(())
}

/// Fits `P(θ) = γ sin²(θ + Δθ) + δ`. Needs ≥ 6 samples spanning ≥ π/2.
pub fn fit_fringe(thetas: &[f64], probs: &[f64]) -> Result<FitResult> {
    check_samples(thetas, probs, 6)?;
    let (lo, hi) = thetas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi - lo < PI / 2.0 - 1e-12 {
        return Err(Error::Fit("fringe samples must span at least half a period".into()));
    }
    // sin²(θ+Δθ) = ½ - ½cos(2θ+2Δθ): linear in (1, cos 2θ, sin 2θ).
    let ([a, b, c], _) = linear_harmonic(thetas, probs, 2.0)
        .ok_or_else(|| Error::Fit("seed regression failed".into()))?;
    let amp = (b * b + c * c).sqrt();
    let gamma = 2.0 * amp;
    let dtheta = if amp > 0.0 { 0.5 * (c.atan2(-b)) } else { 0.0 };
    let delta = a - amp;
    let lm = levenberg_marquardt(&FringeModel, thetas, probs, &[gamma, wrap_half_pi(dtheta), delta]);
    let mut out = finish("fringe", &FringeModel, lm, false);
    // Fold to γ ≥ 0 and Δθ in (-π/2, π/2].
    if out.estimates[0] < 0.0 {
        out.estimates[2] += out.estimates[0];
        out.estimates[0] = -out.estimates[0];
        out.estimates[1] += PI / 2.0;
    }
    out.estimates[1] = wrap_half_pi(out.estimates[1]);
    Ok(out)
}

fn wrap_half_pi(x: f64) -> f64 {
    let y = x.rem_euclid(PI);
    if y > PI / 2.0 {
        y - PI
    } else {
        y
    }
}

/// Frequency search window for [`fit_ramsey`], in 1/ps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyWindow {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl FrequencyWindow {
    /// `centre × (1 ± fraction)`.
    pub fn around(centre: f64, fraction: f64) -> Self {
        Self {
            min: centre * (1.0 - fraction),
            max: centre * (1.0 + fraction),
            points: 2001,
        }
    }
}

/// Fits the Ramsey model with θ fixed. Frequencies are in 1/ps (ΔT in ps).
///
/// The frequency is seeded by a grid search over `window`, solving the linear
/// problem in `(1, cos 2πfΔT, sin 2πfΔT)` at each trial frequency.
pub fn fit_ramsey(delays: &[f64], probs: &[f64], theta: f64, window: FrequencyWindow) -> Result<FitResult> {
    check_samples(delays, probs, 10)?;
    if !(window.min > 0.0 && window.max > window.min && window.points >= 2) {
        return Err(Error::Fit("invalid frequency window".into()));
    }
    let amp_scale = (2.0 * theta).sin();
    if amp_scale.abs() < 1e-9 {
        return Err(Error::Fit("sin(2θ) vanishes; the fringe carries no signal".into()));
    }
    let grid: Vec<(f64, f64, [f64; 3])> = (0..window.points)
        .filter_map(|k| {
            let f = window.min + (window.max - window.min) * k as f64 / (window.points - 1) as f64;
            linear_harmonic(delays, probs, 2.0 * PI * f).map(|(c, rss)| (f, rss, c))
        })
        .collect();
    let best = grid
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Fit("frequency search failed".into()))?;
    // Local minima of the residual across the window that are nearly as good
    // as the best one are separate aliases.
    let total: f64 = {
        let mean = probs.iter().sum::<f64>() / probs.len() as f64;
        probs.iter().map(|p| (p - mean).powi(2)).sum()
    };
    let minima: Vec<&(f64, f64, [f64; 3])> = grid
        .windows(3)
        .filter(|w| w[1].1 <= w[0].1 && w[1].1 <= w[2].1)
        .map(|w| &w[1])
        .collect();
    let alias = minima
        .iter()
        .filter(|m| (m.0 - best.0).abs() > (window.max - window.min) / 50.0)
        .any(|m| m.1 - best.1 < 0.05 * total);
    // A residual that barely depends on f, or an optimum on the window edge,
    // means the window does not pin the frequency down.
    let worst = grid.iter().map(|g| g.1).fold(f64::MIN, f64::max);
    let on_edge = std::ptr::eq(best, &grid[0]) || std::ptr::eq(best, &grid[grid.len() - 1]);
    let alias = alias || worst - best.1 < 0.05 * total || on_edge;

    let (f, _, [a, b, c]) = *best;
    // cos²(x) = ½ + ½cos(2x); 2x = 2πfΔT + 2φ.
    let amp = (b * b + c * c).sqrt();
    let gamma = 2.0 * amp / amp_scale;
    let phi = 0.5 * (-c).atan2(b);
    let delta = a - amp_scale * gamma / 2.0;
    let model = RamseyModel { theta };
    let lm = levenberg_marquardt(&model, delays, probs, &[gamma, f, phi, delta]);
    let mut out = finish("ramsey", &model, lm, alias);
    if out.estimates[0] < 0.0 {
        out.estimates[3] += out.estimates[0] * amp_scale;
        out.estimates[0] = -out.estimates[0];
        out.estimates[2] += PI / 2.0;
    }
    out.estimates[2] = wrap_half_pi(out.estimates[2]);
    Ok(out)
}
