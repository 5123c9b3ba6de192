//! Qubit states, Pauli measurements and the Born rule
//! `p(a,b,c|x,y,z) = Tr[(M^a_x ⊗ M^b_y ⊗ M^c_z) ρ]`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError, Scenario};
use crate::num::Tensor;

pub type CMatrix = DMatrix<Complex64>;

/// Hermiticity, trace and completeness tolerance.
pub const QUANTUM_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for positive operators.
pub const PSD_TOL: f64 = 1e-10;
/// Largest supported qubit count.
pub const MAX_QUBITS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("visibility {0} outside [0, 1]")]
    VisibilityOutOfRange(f64),
    #[error("observable has Bloch norm {0}, expected 1")]
    NonUnitObservable(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("party count {0} outside 2..={MAX_QUBITS}")]
    PartyCount(usize),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
}

pub type Result<T> = std::result::Result<T, QuantumError>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_gap(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// A validated density matrix on `qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        if d != matrix.ncols() || !d.is_power_of_two() || d < 2 {
            return Err(QuantumError::DimensionMismatch(format!("{}x{} is not a qubit register", d, matrix.ncols())));
        }
        let qubits = d.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(QuantumError::PartyCount(qubits));
        }
        if hermitian_gap(&matrix) > QUANTUM_TOL {
            return Err(QuantumError::InvalidState("not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr - c(1.0, 0.0)).norm() > QUANTUM_TOL {
            return Err(QuantumError::InvalidState(format!("trace {tr}")));
        }
        let lo = min_eigenvalue(&matrix);
        if lo < -PSD_TOL {
            return Err(QuantumError::InvalidState(format!("eigenvalue {lo}")));
        }
        Ok(DensityMatrix { qubits, matrix })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(QuantumError::PartyCount(qubits));
        }
        let d = 1usize << qubits;
        DensityMatrix::new(CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0))
    }
}

/// `|GHZ⟩⟨GHZ|` with `|GHZ⟩ = (|0..0⟩ + |1..1⟩)/√2`.
pub fn ghz_state(n: usize) -> Result<DensityMatrix> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return Err(QuantumError::PartyCount(n));
    }
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    for &i in &[0, d - 1] {
        for &j in &[0, d - 1] {
            m[(i, j)] = c(0.5, 0.0);
        }
    }
    DensityMatrix::new(m)
}

/// `v ρ + (1 - v) 𝟙/d`.
pub fn noisy_state(rho: &DensityMatrix, v: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&v) {
        return Err(QuantumError::VisibilityOutOfRange(v));
    }
    let mixed = DensityMatrix::maximally_mixed(rho.qubits())?;
    DensityMatrix::new(rho.matrix() * c(v, 0.0) + mixed.matrix() * c(1.0 - v, 0.0))
}

/// A POVM: positive effects summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    effects: Vec<CMatrix>,
}

impl Measurement {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(QuantumError::InvalidMeasurement("no effects".into()));
        };
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for e in &effects {
            if e.nrows() != d || e.ncols() != d {
                return Err(QuantumError::InvalidMeasurement("effects differ in dimension".into()));
            }
            if hermitian_gap(e) > QUANTUM_TOL || min_eigenvalue(e) < -PSD_TOL {
                return Err(QuantumError::InvalidMeasurement("effect is not positive".into()));
            }
            sum += e;
        }
        if max_abs(&(sum - CMatrix::identity(d, d))) > QUANTUM_TOL {
            return Err(QuantumError::InvalidMeasurement("effects do not sum to the identity".into()));
        }
        Ok(Measurement { effects })
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    /// `Σ_a (-1)^a M^a` for binary measurements.
    pub fn observable(&self) -> CMatrix {
        self.effects.iter().enumerate().fold(CMatrix::zeros(self.dim(), self.dim()), |acc, (a, e)| {
            if a % 2 == 0 {
                acc + e
            } else {
                acc - e
            }
        })
    }
}

/// Projective measurement of `n·σ` with `n = (nx, ny, nz)` a unit vector.
/// Outcome 0 is the `+1` eigenspace.
pub fn pauli_measurement(n: [f64; 3]) -> Result<Measurement> {
    let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > QUANTUM_TOL {
        return Err(QuantumError::NonUnitObservable(norm));
    }
    let obs = pauli_x() * c(n[0], 0.0) + pauli_y() * c(n[1], 0.0) + pauli_z() * c(n[2], 0.0);
    let id = CMatrix::identity(2, 2);
    Measurement::new(vec![(&id + &obs) * c(0.5, 0.0), (&id - &obs) * c(0.5, 0.0)])
}

/// Born-rule behavior; one measurement list per party, indexed by setting.
pub fn behavior_from_quantum(state: &DensityMatrix, measurements: &[Vec<Measurement>]) -> Result<Behavior> {
    if measurements.iter().any(|m| m.is_empty()) {
        return Err(QuantumError::InvalidMeasurement("a party has no settings".into()));
    }
    let dims: Vec<usize> = measurements.iter().map(|m| m[0].dim()).collect();
    if measurements.iter().zip(&dims).any(|(m, &d)| m.iter().any(|x| x.dim() != d)) {
        return Err(QuantumError::DimensionMismatch("settings of one party differ in dimension".into()));
    }
    if dims.iter().product::<usize>() != state.dim() {
        return Err(QuantumError::DimensionMismatch(format!(
            "party dimensions {dims:?} do not multiply to {}",
            state.dim()
        )));
    }
    let scenario = Scenario::new(
        measurements.iter().map(|m| m.len()).collect(),
        measurements.iter().map(|m| m[0].effects().len()).collect(),
    )?;
    if measurements.iter().any(|m| m.iter().any(|x| x.effects().len() != m[0].effects().len())) {
        return Err(QuantumError::InvalidMeasurement("outcome counts differ between settings".into()));
    }
    let rho = state.matrix();
    let p = (0..scenario.len())
        .map(|i| {
            let (o, s) = scenario.decode(i);
            let op = (1..o.len()).fold(measurements[0][s[0]].effects()[o[0]].clone(), |acc, k| {
                kron(&acc, &measurements[k][s[k]].effects()[o[k]])
            });
            // Tr[op ρ] = Σ_ij op_ij ρ_ji
            let mut tr = c(0.0, 0.0);
            for r in 0..op.nrows() {
                for col in 0..op.ncols() {
                    tr += op[(r, col)] * rho[(col, r)];
                }
            }
            tr.re
        })
        .collect();
    Ok(Behavior::new(scenario, Tensor::Float(p))?)
}

/// State and settings reaching `S = 4√2 v` on the Svetlichny functional:
/// GHZ with visibility `v`; Alice measures `(σx − σy)/√2` and `(σx + σy)/√2`,
/// Bob and Charlie measure `σx` and `σy`.
pub fn svetlichny_optimal_setup(v: f64) -> Result<(DensityMatrix, Vec<Vec<Measurement>>)> {
    let state = noisy_state(&ghz_state(3)?, v)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let alice = vec![pauli_measurement([h, -h, 0.0])?, pauli_measurement([h, h, 0.0])?];
    let xy = || -> Result<Vec<Measurement>> {
        Ok(vec![pauli_measurement([1.0, 0.0, 0.0])?, pauli_measurement([0.0, 1.0, 0.0])?])
    };
    Ok((state, vec![alice, xy()?, xy()?]))
}

/// GHZ with every party measuring `σx` and `σy`: Mermin value 4.
pub fn mermin_setup() -> Result<(DensityMatrix, Vec<Vec<Measurement>>)> {
    let xy = || -> Result<Vec<Measurement>> {
        Ok(vec![pauli_measurement([1.0, 0.0, 0.0])?, pauli_measurement([0.0, 1.0, 0.0])?])
    };
    Ok((ghz_state(3)?, vec![xy()?, xy()?, xy()?]))
}

/// Observed behavior of [`svetlichny_optimal_setup`].
pub fn svetlichny_optimal_behavior(v: f64) -> Result<Behavior> {
    let (state, m) = svetlichny_optimal_setup(v)?;
    behavior_from_quantum(&state, &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::{chsh, evaluate, mermin3, svetlichny3};

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn ghz_is_pure_with_half_coherence() {
        let g = ghz_state(3).unwrap();
        assert!((g.matrix().trace().re - 1.0).abs() < 1e-15);
        assert!((g.purity() - 1.0).abs() < 1e-15);
        assert_eq!(g.matrix()[(0, 7)], c(0.5, 0.0));
        let bell = ghz_state(2).unwrap();
        assert_eq!(bell.matrix()[(0, 3)], c(0.5, 0.0));
        assert_eq!(bell.matrix()[(1, 1)], c(0.0, 0.0));
        assert!(ghz_state(1).is_err());
    }

    #[test]
    fn noisy_state_endpoints() {
        let g = ghz_state(3).unwrap();
        assert_eq!(noisy_state(&g, 1.0).unwrap(), g);
        assert_eq!(noisy_state(&g, 0.0).unwrap(), DensityMatrix::maximally_mixed(3).unwrap());
        assert_eq!(noisy_state(&g, 1.5), Err(QuantumError::VisibilityOutOfRange(1.5)));
    }

    #[test]
    fn pauli_x_eigenbasis() {
        let m = pauli_measurement([1.0, 0.0, 0.0]).unwrap();
        let plus = &m.effects()[0];
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((plus[(i, j)] - c(0.5, 0.0)).norm() < 1e-15);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(pauli_measurement([-h, -h, 0.0]).is_ok());
        assert!(matches!(pauli_measurement([2.0, 0.0, 0.0]), Err(QuantumError::NonUnitObservable(_))));
    }

    #[test]
    fn optimal_values() {
        let s = evaluate(&svetlichny3(), &svetlichny_optimal_behavior(1.0).unwrap()).unwrap().to_f64();
        assert!((s - 4.0 * SQRT2).abs() < 1e-9);
        let (state, m) = mermin_setup().unwrap();
        let mv = evaluate(&mermin3(), &behavior_from_quantum(&state, &m).unwrap()).unwrap().to_f64();
        assert!((mv - 4.0).abs() < 1e-9);
        let s0 = evaluate(&svetlichny3(), &svetlichny_optimal_behavior(0.0).unwrap()).unwrap().to_f64();
        assert!(s0.abs() < 1e-9);
        let crit = evaluate(&svetlichny3(), &svetlichny_optimal_behavior(1.0 / SQRT2).unwrap()).unwrap().to_f64();
        assert!((crit - 4.0).abs() < 1e-9);
    }

    #[test]
    fn secret_sharing_fails_for_optimal_settings() {
        let b = svetlichny_optimal_behavior(1.0).unwrap();
        let even: f64 = (0..8usize)
            .filter(|o| o.count_ones() % 2 == 0)
            .map(|o| b.prob(&[o & 1, (o >> 1) & 1, (o >> 2) & 1], &[0, 0, 0]).to_f64())
            .sum();
        assert!((even - 1.0).abs() > 0.1);
    }

    #[test]
    fn outputs_are_nonsignaling() {
        for v in [0.3, 0.8, 1.0] {
            assert!(svetlichny_optimal_behavior(v).unwrap().is_nonsignaling(1e-10));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let (state, mut m) = svetlichny_optimal_setup(1.0).unwrap();
        m.pop();
        assert!(matches!(behavior_from_quantum(&state, &m), Err(QuantumError::DimensionMismatch(_))));
    }

    #[test]
    fn bell_pair_reaches_tsirelson() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = vec![pauli_measurement([1.0, 0.0, 0.0]).unwrap(), pauli_measurement([0.0, 0.0, 1.0]).unwrap()];
        let b = vec![pauli_measurement([h, 0.0, h]).unwrap(), pauli_measurement([h, 0.0, -h]).unwrap()];
        let beh = behavior_from_quantum(&ghz_state(2).unwrap(), &[a, b]).unwrap();
        let v = evaluate(&chsh(false), &beh).unwrap().to_f64();
        assert!((v - 2.0 * SQRT2).abs() < 1e-12);
    }
}
