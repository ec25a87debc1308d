//! Qubit gate algebra, extraction of effective gates from multilevel dynamics,
//! and fidelity evaluation.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::atom::qubit_basis;
use crate::dynamics::{propagate_lindblad, propagate_schrodinger, HamiltonianModel, PropagationConfig};
use crate::{Error, Result, C64};

/// Leakage above which an extracted gate is flagged.
pub const DEFAULT_LEAKAGE_BOUND: f64 = 0.05;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// A 2×2 operator on `{|0⟩, |1⟩}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitUnitary(pub Matrix2<C64>);

impl QubitUnitary {
    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(2, 2, |i, j| self.0[(i, j)])
    }

    pub fn compose(&self, after: &QubitUnitary) -> QubitUnitary {
        QubitUnitary(after.0 * self.0)
    }

    pub fn unitarity_error(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix2::identity()).norm()
    }
}

/// Matrix serialized as rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(pub DMatrix<C64>);

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.0.nrows())
            .map(|i| (0..self.0.ncols()).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(Self(DMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1]))))
    }
}

impl Serialize for QubitUnitary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ComplexMatrix(self.to_dmatrix()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for QubitUnitary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?.0;
        if m.shape() != (2, 2) {
            return Err(serde::de::Error::custom("expected a 2x2 matrix"));
        }
        Ok(Self(Matrix2::from_fn(|i, j| m[(i, j)])))
    }
}

/// Effective gate extracted from a full simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    /// Projected block `⟨i|U|j⟩` over the qubit basis (2×2, or 1×1 for a stretched manifold).
    pub operator: ComplexMatrix,
    /// Nearest unitary to `operator` (polar decomposition), global phase removed.
    pub unitary: ComplexMatrix,
    /// `arg det(nearest unitary) / 2`.
    pub global_phase: f64,
    pub leakage: f64,
    pub fidelity: f64,
    /// Rotation angle of the nearest unitary, in `[0, π]`.
    pub rotation_angle: f64,
    pub rotation_axis: [f64; 3],
    /// Leakage exceeded the configured bound.
    pub flagged: bool,
}

/// `cos(Θ/2) 𝟙 - i sin(Θ/2) n·σ`.
pub fn ideal_rotation(axis: [f64; 3], theta: f64) -> Result<QubitUnitary> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("rotation axis must be a unit vector (norm {norm})")));
    }
    let [nx, ny, nz] = axis;
    let (s, c) = (theta / 2.0).sin_cos();
    let m = Matrix2::new(
        C64::new(c, -s * nz),
        C64::new(-s * ny, -s * nx),
        C64::new(s * ny, -s * nx),
        C64::new(c, s * nz),
    );
    Ok(QubitUnitary(m))
}

/// Rotation about `(cos ω_hf T, sin ω_hf T, 0)`, set by the free precession delay `T`.
pub fn delayed_axis(delay: f64, hyperfine_splitting: f64) -> [f64; 3] {
    let (s, c) = (hyperfine_splitting * delay).sin_cos();
    [c, s, 0.0]
}

/// `Θ = 2(θ₂ - θ₁)` wrapped to `(-2π, 2π]`.
pub fn geometric_phase(theta1: f64, theta2: f64) -> f64 {
    let x = 2.0 * (theta2 - theta1);
    let y = x % (2.0 * TAU);
    if y > TAU {
        y - 2.0 * TAU
    } else if y <= -TAU {
        y + 2.0 * TAU
    } else {
        y
    }
}

/// Gate on the `m_F` qubit produced by pathway phases `φ₋ - φ₊ = Θ` (global phase dropped).
///
/// In the ground fine-structure basis the drive is `diag(e^{iΘ/2}, e^{-iΘ/2})` on
/// `(m_J = -½, m_J = +½)`; the qubit matrix follows from the hyperfine
/// decomposition. Stretched manifolds (`|m_F| = I + ½`) give the identity.
pub fn mf_manifold_gate(nuclear_spin: f64, m_f: f64, theta: f64) -> Result<QubitUnitary> {
    let basis = qubit_basis(nuclear_spin, m_f)?;
    if basis.len() == 1 {
        return Ok(QubitUnitary::identity());
    }
    let phase = |two_mj: i32| C64::from_polar(1.0, -(two_mj as f64) * theta / 2.0);
    let m = Matrix2::from_fn(|i, j| {
        let mut acc = ZERO;
        for (si, ci) in &basis[i] {
            for (sj, cj) in &basis[j] {
                if si == sj {
                    acc += phase(si.two_mj) * (ci * cj);
                }
            }
        }
        acc
    });
    Ok(QubitUnitary(m))
}

fn input_states() -> [DVector<C64>; 4] {
    let h = FRAC_1_SQRT_2;
    [
        DVector::from_vec(vec![ONE, ZERO]),
        DVector::from_vec(vec![ZERO, ONE]),
        DVector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)]),
        DVector::from_vec(vec![C64::new(h, 0.0), C64::new(0.0, h)]),
    ]
}

/// Mean of `|⟨ψ|U_ideal† M|ψ⟩|²` over `|0⟩, |1⟩, |+⟩, |+i⟩`.
///
/// `actual` may be non-unitary (leakage lowers the result). 1×1 operators
/// compare the single amplitude.
pub fn gate_fidelity(actual: &DMatrix<C64>, ideal: &DMatrix<C64>) -> Result<f64> {
    if actual.shape() != ideal.shape() || !actual.is_square() {
        return Err(Error::param("gate and ideal operator shapes differ"));
    }
    if actual.nrows() == 1 {
        return Ok((ideal[(0, 0)].conj() * actual[(0, 0)]).norm_sqr().min(1.0));
    }
    if actual.nrows() != 2 {
        return Err(Error::param("fidelity is defined for qubit operators"));
    }
    let m = ideal.adjoint() * actual;
    let sum: f64 = input_states()
        .iter()
        .map(|psi| psi.dotc(&(&m * psi)).norm_sqr())
        .sum();
    Ok((sum / 4.0).clamp(0.0, 1.0))
}

/// Nearest unitary by polar decomposition.
pub fn nearest_unitary(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let svd = m.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::param("singular value decomposition failed")),
    }
}

/// Rotation angle `Θ ∈ [0, π]` and axis of a 2×2 unitary, ignoring its global phase.
pub fn rotation_parameters(u: &Matrix2<C64>) -> (f64, [f64; 3]) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let v = u * C64::from_polar(1.0, -det.arg() / 2.0);
    // v = a𝟙 - i(b·σ), fix the sign so that a ≥ 0.
    let mut a = (v[(0, 0)] + v[(1, 1)]).re / 2.0;
    let mut n = [
        -(v[(0, 1)] + v[(1, 0)]).im / 2.0,
        (v[(1, 0)] - v[(0, 1)]).re / 2.0,
        -(v[(0, 0)] - v[(1, 1)]).im / 2.0,
    ];
    if a < 0.0 {
        a = -a;
        n = n.map(|x| -x);
    }
    let s = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    let angle = 2.0 * s.atan2(a);
    if s < 1e-15 {
        return (angle, [1.0, 0.0, 0.0]);
    }
    (angle.min(PI + 1e-15), n.map(|x| x / s))
}

struct QubitEmbedding {
    vectors: Vec<DVector<C64>>,
}

impl QubitEmbedding {
    fn new(model: &HamiltonianModel, m_f: f64) -> Result<Self> {
        let basis = qubit_basis(model.atom.nuclear_spin, m_f)?;
        let vectors = basis
            .iter()
            .map(|expansion| {
                let mut v = DVector::from_element(model.dim(), ZERO);
                for (state, c) in expansion {
                    let idx = model.index_of(state).ok_or_else(|| {
                        Error::param(format!("qubit state {} is not in the model basis", state.label()))
                    })?;
                    v[idx] = C64::new(*c, 0.0);
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { vectors })
    }

    fn embed(&self, amplitudes: &DVector<C64>) -> DVector<C64> {
        let mut v = self.vectors[0].clone() * amplitudes[0];
        for (k, b) in self.vectors.iter().enumerate().skip(1) {
            v += b * amplitudes[k];
        }
        v
    }
}

/// Propagates the qubit basis states of the `m_F` manifold and projects the
/// results back onto the qubit subspace.
pub fn extract_gate(
    model: &HamiltonianModel,
    m_f: f64,
    ideal: &QubitUnitary,
    config: &PropagationConfig,
    leakage_bound: f64,
) -> Result<GateOutcome> {
    let emb = QubitEmbedding::new(model, m_f)?;
    let d = emb.vectors.len();
    let mut block = DMatrix::from_element(d, d, ZERO);
    for j in 0..d {
        let out = propagate_schrodinger(model, &emb.vectors[j], config)?;
        for i in 0..d {
            block[(i, j)] = emb.vectors[i].dotc(&out.state);
        }
    }
    outcome_from_block(block, ideal, leakage_bound)
}

pub(crate) fn outcome_from_block(
    block: DMatrix<C64>,
    ideal: &QubitUnitary,
    leakage_bound: f64,
) -> Result<GateOutcome> {
    let d = block.nrows();
    let kept: f64 = block.iter().map(|a| a.norm_sqr()).sum::<f64>() / d as f64;
    let leakage = (1.0 - kept).clamp(0.0, 1.0);
    let near = nearest_unitary(&block)?;
    let (global_phase, unitary, angle, axis, fidelity) = if d == 2 {
        let det = near[(0, 0)] * near[(1, 1)] - near[(0, 1)] * near[(1, 0)];
        let gp = det.arg() / 2.0;
        let su = &near * C64::from_polar(1.0, -gp);
        let m2 = Matrix2::from_fn(|i, j| su[(i, j)]);
        let (angle, axis) = rotation_parameters(&m2);
        let f = gate_fidelity(&block, &ideal.to_dmatrix())?;
        (gp, su, angle, axis, f)
    } else {
        let gp = near[(0, 0)].arg();
        let one = DMatrix::from_element(1, 1, ONE);
        let f = gate_fidelity(&block, &one)?;
        (gp, one, 0.0, [1.0, 0.0, 0.0], f)
    };
    Ok(GateOutcome {
        operator: ComplexMatrix(block),
        unitary: ComplexMatrix(unitary),
        global_phase,
        leakage,
        fidelity,
        rotation_angle: angle,
        rotation_axis: axis,
        flagged: leakage > leakage_bound,
    })
}

/// Fidelity of the open-system gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladGate {
    /// Mean `⟨ψ_ideal|ρ_out|ψ_ideal⟩` over the four input states.
    pub fidelity: f64,
    /// One minus the mean population left in the qubit subspace.
    pub leakage: f64,
}

/// Four-state fidelity with density-matrix propagation; one run per input state.
pub fn lindblad_gate_fidelity(
    model: &HamiltonianModel,
    m_f: f64,
    ideal: &QubitUnitary,
    config: &PropagationConfig,
) -> Result<LindbladGate> {
    let emb = QubitEmbedding::new(model, m_f)?;
    let inputs: Vec<DVector<C64>> = if emb.vectors.len() == 1 {
        vec![DVector::from_vec(vec![ONE])]
    } else {
        input_states().to_vec()
    };
    let u = if emb.vectors.len() == 1 {
        DMatrix::from_element(1, 1, ONE)
    } else {
        ideal.to_dmatrix()
    };
    let mut fid = 0.0;
    let mut kept = 0.0;
    for psi in &inputs {
        let v = emb.embed(psi);
        let rho0 = &v * v.adjoint();
        let out = propagate_lindblad(model, &rho0, config)?;
        let target = emb.embed(&(&u * psi));
        fid += target.dotc(&(&out.state * &target)).re;
        for b in &emb.vectors {
            kept += b.dotc(&(&out.state * b)).re;
        }
    }
    let n = inputs.len() as f64;
    Ok(LindbladGate {
        fidelity: (fid / n).clamp(0.0, 1.0),
        leakage: (1.0 - kept / n).clamp(0.0, 1.0),
    })
}

/// Pauli-X rotation `U_x̂(Θ)`.
pub fn x_rotation(theta: f64) -> QubitUnitary {
    ideal_rotation([1.0, 0.0, 0.0], theta).expect("unit axis")
}

/// `−iX`, the ideal gate at `Θ = π`.
pub fn minus_i_x() -> QubitUnitary {
    QubitUnitary(Matrix2::new(ZERO, -I, -I, ZERO))
}
