use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

use berrygate::gates::{
    gate_fidelity, geometric_phase, ideal_rotation, mf_manifold_gate, nearest_unitary, rotation_parameters, x_rotation,
};
use berrygate::scenario::GateScenario;
use berrygate::C64;
use nalgebra::{DMatrix, Matrix2};
use proptest::prelude::*;

mod common;
use common::expm_oracle;

fn pauli(axis: [f64; 3]) -> DMatrix<C64> {
    let [x, y, z] = axis;
    DMatrix::from_row_slice(2, 2, &[C64::new(z, 0.0), C64::new(x, -y), C64::new(x, y), C64::new(-z, 0.0)])
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn rotation_is_the_exponential_of_the_spin_operator(
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in 0.1f64..1.0, theta in -7.0f64..7.0,
    ) {
        let n = unit([x, y, z]);
        let u = ideal_rotation(n, theta).unwrap().to_dmatrix();
        let want = expm_oracle(&pauli(n), theta / 2.0);
        prop_assert!(max_diff(&u, &want) < 1e-12);
    }

    #[test]
    fn rotations_about_one_axis_compose_additively(a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let ab = x_rotation(a).compose(&x_rotation(b));
        prop_assert!((ab.0 - x_rotation(a + b).0).norm() < 1e-12);
        prop_assert!(ab.unitarity_error() < 1e-12);
    }

    #[test]
    fn rotation_parameters_invert_ideal_rotation(
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, theta in 0.05f64..3.1, phase in -3.0f64..3.0,
    ) {
        prop_assume!(x * x + y * y + z * z > 0.01);
        let n = unit([x, y, z]);
        let u = ideal_rotation(n, theta).unwrap().0 * C64::from_polar(1.0, phase);
        let (angle, axis) = rotation_parameters(&u);
        prop_assert!((angle - theta).abs() < 1e-9);
        for k in 0..3 {
            prop_assert!((axis[k] - n[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_ignores_global_phase(theta in -3.0f64..3.0, phase in -3.0f64..3.0) {
        let u = x_rotation(theta).to_dmatrix();
        let shifted = &u * C64::from_polar(1.0, phase);
        prop_assert!((gate_fidelity(&shifted, &u).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_unitary_is_unitary(seed in 0u64..1000) {
        let mut s = seed;
        let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5 };
        let m = DMatrix::from_fn(2, 2, |_, _| C64::new(next(), next()));
        let u = nearest_unitary(&m).unwrap();
        prop_assert!(max_diff(&(u.adjoint() * &u), &DMatrix::identity(2, 2)) < 1e-12);
    }
}

#[test]
fn fidelity_of_orthogonal_operations() {
    let x = x_rotation(PI).to_dmatrix();
    let id = DMatrix::<C64>::identity(2, 2);
    assert!(gate_fidelity(&x, &id).unwrap() < 0.25 + 1e-12);
    let u = x_rotation(FRAC_PI_2).to_dmatrix();
    // |⟨ψ|U|ψ⟩|² over |0⟩, |1⟩, |+⟩, |+i⟩: ½, ½, 1, ½
    let want = (0.5 + 0.5 + 1.0 + 0.5) / 4.0;
    assert!((gate_fidelity(&u, &id).unwrap() - want).abs() < 1e-12);
}

#[test]
fn clock_manifold_gate_is_an_x_rotation() {
    for theta in [0.0, 0.3, FRAC_PI_2, PI, 2.5] {
        let u = mf_manifold_gate(1.5, 0.0, theta).unwrap();
        assert!((u.0 - x_rotation(theta).0).norm() < 1e-12);
    }
    let stretched = mf_manifold_gate(1.5, 2.0, 1.0).unwrap();
    assert_eq!(stretched.0, Matrix2::identity());
}

#[test]
fn simulated_gates_follow_the_polarization_angle() {
    for k in 0..=4 {
        let dtheta = k as f64 * FRAC_PI_8;
        let s = GateScenario {
            theta1: 0.4,
            theta2: 0.4 + dtheta,
            ..GateScenario::default()
        };
        let out = s.extract_gate().unwrap();
        assert!(out.fidelity >= 0.999, "Δθ = {dtheta}: fidelity {}", out.fidelity);
        assert!((out.rotation_angle - geometric_phase(s.theta1, s.theta2)).abs() < 1e-2, "Δθ = {dtheta}");
        if k > 0 {
            assert!((out.rotation_axis[0].abs() - 1.0).abs() < 1e-2, "axis {:?}", out.rotation_axis);
        }
        assert!(out.leakage < 1e-3);
        let phased = &out.operator.0 * C64::from_polar(1.0, 1.234);
        let ideal = s.ideal_gate().unwrap().to_dmatrix();
        assert!((gate_fidelity(&phased, &ideal).unwrap() - out.fidelity).abs() < 1e-12);
    }
}
