//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use berrygate::C64;

/// `exp(a)` by scaling and squaring a truncated Taylor series.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let squarings = (norm.log2().ceil().max(0.0) as i32) + 4;
    let scaled = a / C64::new(2f64.powi(squarings), 0.0);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i H t)`.
pub fn expm_oracle(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    expm(&(h * C64::new(0.0, -t)))
}

/// Fourth-order Magnus propagation of `i dψ/dt = H(t) ψ` with `steps` equal
/// steps (two Gauss points per step).
pub fn magnus4(h: &dyn Fn(f64) -> DMatrix<C64>, psi0: &DVector<C64>, window: (f64, f64), steps: usize) -> DVector<C64> {
    let dt = (window.1 - window.0) / steps as f64;
    let c = 3f64.sqrt() / 6.0;
    let mut psi = psi0.clone();
    for k in 0..steps {
        let t = window.0 + (k as f64 + 0.5) * dt;
        let h1 = h(t - c * dt);
        let h2 = h(t + c * dt);
        let comm = &h2 * &h1 - &h1 * &h2;
        let omega = (&h1 + &h2) * C64::new(0.0, -dt / 2.0) - comm * C64::new(3f64.sqrt() / 12.0 * dt * dt, 0.0);
        psi = expm(&omega) * psi;
    }
    psi
}

/// Doubles the step count until successive results agree to `tol`, then
/// returns the Richardson-extrapolated state.
pub fn converged_magnus(h: &dyn Fn(f64) -> DMatrix<C64>, psi0: &DVector<C64>, window: (f64, f64), tol: f64) -> DVector<C64> {
    let mut steps = 1000;
    let mut coarse = magnus4(h, psi0, window, steps);
    loop {
        steps *= 2;
        let fine = magnus4(h, psi0, window, steps);
        let diff = (&fine - &coarse).norm();
        if diff < tol || steps >= 1 << 17 {
            return &fine + (&fine - &coarse) / C64::new(15.0, 0.0);
        }
        coarse = fine;
    }
}

pub fn basis_vector(n: usize, i: usize) -> DVector<C64> {
    let mut v = DVector::from_element(n, C64::new(0.0, 0.0));
    v[i] = C64::new(1.0, 0.0);
    v
}
