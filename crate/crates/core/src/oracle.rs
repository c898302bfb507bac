//! Brute-force density-matrix reference.
//!
//! Slow, allocation-heavy and independent of [`crate::pauli`]: states are
//! 2×2 or 4×4 complex matrices evolved by explicit unitaries and Kraus
//! operators. Used by the test-suite to cross-check the Pauli-Liouville code.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::pauli::{Pauli, PauliChannel, PauliVector1Q, PauliVector2Q, Ptm1Q, Qubit};

pub type CMatrix = DMatrix<Complex64>;

pub const ORACLE_TOL: f64 = 1e-12;
const EIG_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0}; only 2 and 4 are supported")]
    UnsupportedDimension(usize),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace {0} differs from 1")]
    BadTrace(f64),
    #[error("negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("Kraus operators are not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ci(im: f64) -> Complex64 {
    Complex64::new(0.0, im)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn pauli_matrix(p: Pauli) -> CMatrix {
    let z = c(0.0);
    let o = c(1.0);
    match p {
        Pauli::I => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => CMatrix::from_row_slice(2, 2, &[z, ci(-1.0), ci(1.0), z]),
        Pauli::Z => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `P ⊗ Q` as a 4×4 matrix.
pub fn pauli_pair_matrix(p: Pauli, q: Pauli) -> CMatrix {
    kron(&pauli_matrix(p), &pauli_matrix(q))
}

/// Validated 2×2 or 4×4 density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self, OracleError> {
        let dim = rho.nrows();
        if rho.ncols() != dim {
            return Err(OracleError::DimensionMismatch {
                expected: dim,
                got: rho.ncols(),
            });
        }
        if dim != 2 && dim != 4 {
            return Err(OracleError::UnsupportedDimension(dim));
        }
        let herm = max_abs(&(&rho - rho.adjoint()));
        if herm > ORACLE_TOL {
            return Err(OracleError::NotHermitian(herm));
        }
        let tr = rho.trace();
        if (tr - c(1.0)).norm() > ORACLE_TOL {
            return Err(OracleError::BadTrace(tr.re));
        }
        let eig = SymmetricEigen::new(rho.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -EIG_TOL {
            return Err(OracleError::NegativeEigenvalue(min));
        }
        Ok(Self { rho })
    }

    /// `|ψ⟩⟨ψ|` for a normalised ket.
    pub fn from_ket(psi: &[Complex64]) -> Result<Self, OracleError> {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    /// `⟨0|ρ|0⟩` (`⟨00|ρ|00⟩` for two qubits).
    pub fn prob_zero(&self) -> f64 {
        self.rho[(0, 0)].re
    }

    /// Diagonal in the computational basis: outcome probabilities of a `Z` measurement.
    pub fn diagonal_probs(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).collect()
    }
}

/// Kraus representation `ρ ↦ Σ K ρ K†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self, OracleError> {
        let dim = ops.first().map(|k| k.nrows()).unwrap_or(0);
        if dim != 2 && dim != 4 {
            return Err(OracleError::UnsupportedDimension(dim));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for k in &ops {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(OracleError::DimensionMismatch {
                    expected: dim,
                    got: k.nrows(),
                });
            }
            sum += k.adjoint() * k;
        }
        let dev = max_abs(&(sum - CMatrix::identity(dim, dim)));
        if dev > ORACLE_TOL {
            return Err(OracleError::NotTracePreserving(dev));
        }
        Ok(Self { ops })
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn identity(dim: usize) -> Result<Self, OracleError> {
        Self::new(vec![CMatrix::identity(dim, dim)])
    }

    /// `(1-p_X-p_Y-p_Z)ρ + p_X XρX + p_Y YρY + p_Z ZρZ`.
    pub fn pauli(params: &PauliChannel) -> Self {
        let ops = Pauli::ALL
            .iter()
            .zip(params.probabilities())
            .filter(|(_, p)| *p > 0.0)
            .map(|(&pl, p)| pauli_matrix(pl) * c(p.sqrt()))
            .collect();
        Self::new(ops).expect("Pauli channel probabilities sum to one")
    }

    pub fn amplitude_damping(gamma: f64) -> Self {
        let z = c(0.0);
        let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0), z, z, c((1.0 - gamma).sqrt())]);
        let k1 = CMatrix::from_row_slice(2, 2, &[z, c(gamma.sqrt()), z, z]);
        Self::new(vec![k0, k1]).expect("valid damping parameter")
    }

    /// Pure dephasing; off-diagonals scale by `sqrt(1 - lambda)`.
    pub fn phase_damping(lambda: f64) -> Self {
        let z = c(0.0);
        let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0), z, z, c((1.0 - lambda).sqrt())]);
        let k1 = CMatrix::from_row_slice(2, 2, &[z, z, z, c(lambda.sqrt())]);
        Self::new(vec![k0, k1]).expect("valid damping parameter")
    }

    /// `other` after `self`.
    pub fn then(&self, other: &KrausChannel) -> KrausChannel {
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for b in &other.ops {
            for a in &self.ops {
                ops.push(b * a);
            }
        }
        KrausChannel { ops }
    }

    /// Lift a single-qubit channel to act on one qubit of a pair.
    pub fn on_qubit(&self, qubit: Qubit) -> Result<KrausChannel, OracleError> {
        if self.dim() != 2 {
            return Err(OracleError::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        Ok(KrausChannel {
            ops: self.ops.iter().map(|k| embed(k, qubit)).collect(),
        })
    }

    /// Apply to an arbitrary operator (not necessarily a state).
    pub fn apply_operator(&self, op: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(op.nrows(), op.ncols());
        for k in &self.ops {
            out += k * op * k.adjoint();
        }
        out
    }
}

/// Gates of the oracle. `HadamardPhase` is the product `S·H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unitary {
    H,
    S,
    Sdg,
    HadamardPhase,
    Cnot { control: Qubit },
    Local(SingleGate, Qubit),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleGate {
    H,
    S,
    Sdg,
    HadamardPhase,
    X,
    Z,
}

fn single_matrix(g: SingleGate) -> CMatrix {
    let z = c(0.0);
    let r = c(std::f64::consts::FRAC_1_SQRT_2);
    match g {
        SingleGate::H => CMatrix::from_row_slice(2, 2, &[r, r, r, -r]),
        SingleGate::S => CMatrix::from_row_slice(2, 2, &[c(1.0), z, z, ci(1.0)]),
        SingleGate::Sdg => CMatrix::from_row_slice(2, 2, &[c(1.0), z, z, ci(-1.0)]),
        SingleGate::HadamardPhase => single_matrix(SingleGate::S) * single_matrix(SingleGate::H),
        SingleGate::X => pauli_matrix(Pauli::X),
        SingleGate::Z => pauli_matrix(Pauli::Z),
    }
}

fn embed(k: &CMatrix, qubit: Qubit) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    match qubit {
        Qubit::First => kron(k, &id),
        Qubit::Second => kron(&id, k),
    }
}

impl Unitary {
    pub fn matrix(self) -> CMatrix {
        match self {
            Unitary::H => single_matrix(SingleGate::H),
            Unitary::S => single_matrix(SingleGate::S),
            Unitary::Sdg => single_matrix(SingleGate::Sdg),
            Unitary::HadamardPhase => single_matrix(SingleGate::HadamardPhase),
            Unitary::Local(g, q) => embed(&single_matrix(g), q),
            Unitary::Cnot { control } => {
                let mut m = CMatrix::zeros(4, 4);
                // basis |ab⟩ at index 2a + b
                for a in 0..2usize {
                    for b in 0..2usize {
                        let (na, nb) = match control {
                            Qubit::First => (a, b ^ a),
                            Qubit::Second => (a ^ b, b),
                        };
                        m[(2 * na + nb, 2 * a + b)] = c(1.0);
                    }
                }
                m
            }
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Unitary::H | Unitary::S | Unitary::Sdg | Unitary::HadamardPhase => 2,
            Unitary::Cnot { .. } | Unitary::Local(..) => 4,
        }
    }

    /// `U A U†` on an arbitrary operator.
    pub fn conjugate(self, op: &CMatrix) -> CMatrix {
        let u = self.matrix();
        &u * op * u.adjoint()
    }
}

pub fn pauli_to_density(v: &PauliVector1Q) -> Result<DensityMatrix, OracleError> {
    let mut rho = CMatrix::zeros(2, 2);
    for p in Pauli::ALL {
        rho += pauli_matrix(p) * c(v.coeff(p) / 2.0);
    }
    DensityMatrix::new(rho)
}

pub fn pauli2_to_density(v: &PauliVector2Q) -> Result<DensityMatrix, OracleError> {
    let mut rho = CMatrix::zeros(4, 4);
    for p in Pauli::ALL {
        for q in Pauli::ALL {
            rho += pauli_pair_matrix(p, q) * c(v.coeff(p, q) / 4.0);
        }
    }
    DensityMatrix::new(rho)
}

pub fn density_to_pauli(rho: &DensityMatrix) -> Result<PauliVector1Q, OracleError> {
    if rho.dim() != 2 {
        return Err(OracleError::DimensionMismatch {
            expected: 2,
            got: rho.dim(),
        });
    }
    let mut coeffs = [0.0; 4];
    for p in Pauli::ALL {
        coeffs[p.index()] = (pauli_matrix(p) * rho.matrix()).trace().re;
    }
    Ok(PauliVector1Q::new(coeffs))
}

pub fn density_to_pauli2(rho: &DensityMatrix) -> Result<PauliVector2Q, OracleError> {
    if rho.dim() != 4 {
        return Err(OracleError::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let mut v = PauliVector2Q::new([0.0; 16]);
    for p in Pauli::ALL {
        for q in Pauli::ALL {
            v.set(p, q, (pauli_pair_matrix(p, q) * rho.matrix()).trace().re);
        }
    }
    Ok(v)
}

pub fn evolve_kraus(rho: &DensityMatrix, ch: &KrausChannel) -> Result<DensityMatrix, OracleError> {
    if rho.dim() != ch.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: rho.dim(),
            got: ch.dim(),
        });
    }
    Ok(DensityMatrix {
        rho: ch.apply_operator(rho.matrix()),
    })
}

pub fn evolve_unitary(rho: &DensityMatrix, u: Unitary) -> Result<DensityMatrix, OracleError> {
    if rho.dim() != u.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: rho.dim(),
            got: u.dim(),
        });
    }
    Ok(DensityMatrix {
        rho: u.conjugate(rho.matrix()),
    })
}

/// Partial trace over one qubit of a 4×4 state.
pub fn trace_out(rho: &DensityMatrix, discard: Qubit) -> Result<DensityMatrix, OracleError> {
    if rho.dim() != 4 {
        return Err(OracleError::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let m = rho.matrix();
    let mut out = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = c(0.0);
            for k in 0..2 {
                acc += match discard {
                    Qubit::First => m[(2 * k + i, 2 * k + j)],
                    Qubit::Second => m[(2 * i + k, 2 * j + k)],
                };
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix { rho: out })
}

/// `R[i][j] = ½ Tr[P_i Λ(P_j)]` for a single-qubit linear map `Λ`.
pub fn ptm_of_map(map: impl Fn(&CMatrix) -> CMatrix) -> Ptm1Q {
    let mut m = [[0.0; 4]; 4];
    for j in Pauli::ALL {
        let image = map(&pauli_matrix(j));
        for i in Pauli::ALL {
            m[i.index()][j.index()] = (pauli_matrix(i) * &image).trace().re / 2.0;
        }
    }
    Ptm1Q::new(m)
}

pub fn ptm_of_unitary(u: Unitary) -> Ptm1Q {
    ptm_of_map(|op| u.conjugate(op))
}

pub fn ptm_of_kraus(ch: &KrausChannel) -> Ptm1Q {
    ptm_of_map(|op| ch.apply_operator(op))
}

/// Signed permutation induced by CNOT conjugation on the 16 two-qubit Pauli
/// products, in the same `(image, sign)` layout as [`crate::pauli::cnot_table`].
///
/// Panics if the conjugated operator is not a signed Pauli product, which
/// cannot happen for a Clifford gate.
pub fn cnot_pauli_table(control: Qubit) -> [(usize, i8); 16] {
    let u = Unitary::Cnot { control };
    let mut table = [(0usize, 0i8); 16];
    for p in Pauli::ALL {
        for q in Pauli::ALL {
            let k = PauliVector2Q::index(p, q);
            let image = u.conjugate(&pauli_pair_matrix(p, q));
            let mut found = None;
            for a in Pauli::ALL {
                for b in Pauli::ALL {
                    let overlap = (pauli_pair_matrix(a, b) * &image).trace() / c(4.0);
                    if overlap.norm() > 0.5 {
                        found = Some((PauliVector2Q::index(a, b), overlap.re.signum() as i8));
                    }
                }
            }
            table[k] = found.expect("CNOT maps Pauli products to Pauli products");
        }
    }
    table
}

/// Combined T1/T2 memory noise over `dt`: amplitude damping with
/// `γ = 1 - e^{-dt/T1}` followed by dephasing chosen so coherences decay as
/// `e^{-dt/T2}` overall. Requires `T2 ≤ 2·T1`.
pub fn t1t2_channel(dt: f64, t1: f64, t2: f64) -> KrausChannel {
    let gamma = 1.0 - (-dt / t1).exp();
    // amplitude damping already scales coherences by sqrt(1-γ) = e^{-dt/(2 T1)};
    // the dephasing factor is built directly to avoid computing sqrt(1 - (1 - r²))
    let r = (-dt / t2 + dt / (2.0 * t1)).exp().min(1.0);
    let z = c(0.0);
    let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0), z, z, c(r)]);
    let k1 = CMatrix::from_row_slice(2, 2, &[z, z, z, c((1.0 - r * r).sqrt())]);
    let dephase = KrausChannel::new(vec![k0, k1]).expect("valid dephasing factor");
    let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0), z, z, c((-dt / (2.0 * t1)).exp())]);
    let k1 = CMatrix::from_row_slice(2, 2, &[z, c(gamma.sqrt()), z, z]);
    let damping = KrausChannel::new(vec![k0, k1]).expect("valid damping parameter");
    damping.then(&dephase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{cnot_table, Gate};

    fn close(a: &CMatrix, b: &CMatrix) -> bool {
        max_abs(&(a - b)) < 1e-12
    }

    #[test]
    fn conversions() {
        let rho = pauli_to_density(&PauliVector1Q::zero()).unwrap();
        assert!(close(
            rho.matrix(),
            &CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)])
        ));
        let mixed = pauli_to_density(&PauliVector1Q::maximally_mixed()).unwrap();
        assert!(close(mixed.matrix(), &(CMatrix::identity(2, 2) * c(0.5))));
        let plus = pauli_to_density(&PauliVector1Q::plus()).unwrap();
        assert!(close(plus.matrix(), &CMatrix::from_element(2, 2, c(0.5))));
        assert_eq!(density_to_pauli(&rho).unwrap(), PauliVector1Q::zero());
        assert!(pauli_to_density(&PauliVector1Q::new([1.0, 1.0, 1.0, 0.0])).is_err());
    }

    #[test]
    fn cnot_fixes_zero_zero() {
        let v = crate::pauli::tensor(&PauliVector1Q::zero(), &PauliVector1Q::zero());
        let rho = pauli2_to_density(&v).unwrap();
        let out = evolve_unitary(&rho, Unitary::Cnot { control: Qubit::First }).unwrap();
        assert!(density_to_pauli2(&out).unwrap().max_abs_diff(&v) < 1e-12);
    }

    #[test]
    fn kraus_examples() {
        let plus = pauli_to_density(&PauliVector1Q::plus()).unwrap();
        let bf = KrausChannel::pauli(&PauliChannel::bit_flip(0.3).unwrap());
        assert!(close(evolve_kraus(&plus, &bf).unwrap().matrix(), plus.matrix()));
        let id = KrausChannel::identity(2).unwrap();
        assert!(close(evolve_kraus(&plus, &id).unwrap().matrix(), plus.matrix()));
        let dep = KrausChannel::pauli(&PauliChannel::new(0.0, 0.0, 0.0).unwrap());
        let out = evolve_kraus(&plus, &dep).unwrap();
        assert!(close(out.matrix(), &(CMatrix::identity(2, 2) * c(0.5))));
        assert!(evolve_kraus(&plus, &id.on_qubit(Qubit::First).unwrap()).is_err());
    }

    #[test]
    fn unitary_examples() {
        let zero = pauli_to_density(&PauliVector1Q::zero()).unwrap();
        let plus = pauli_to_density(&PauliVector1Q::plus()).unwrap();
        assert!(close(evolve_unitary(&zero, Unitary::H).unwrap().matrix(), plus.matrix()));
        assert!(close(
            &Unitary::H.conjugate(&pauli_matrix(Pauli::X)),
            &pauli_matrix(Pauli::Z)
        ));
        assert!(close(
            &Unitary::S.conjugate(&pauli_matrix(Pauli::Y)),
            &(-pauli_matrix(Pauli::X))
        ));
    }

    #[test]
    fn gate_ptms_match_oracle() {
        let pairs = [
            (Gate::Hadamard, Unitary::H),
            (Gate::Phase, Unitary::S),
            (Gate::HadamardPhase, Unitary::HadamardPhase),
        ];
        for (g, u) in pairs {
            assert!(g.ptm().unwrap().max_abs_diff(&ptm_of_unitary(u)) < 1e-12);
        }
    }

    #[test]
    fn hadamard_phase_dressing_row() {
        let ch = PauliChannel::new(0.5, 0.25, 0.35).unwrap();
        let k = KrausChannel::pauli(&ch);
        let u = Unitary::HadamardPhase;
        let dressed = ptm_of_map(|op| u.matrix().adjoint() * k.apply_operator(&u.conjugate(op)) * u.matrix());
        assert!(dressed.max_abs_diff(&Ptm1Q::diag([1.0, 0.35, 0.5, 0.25])) < 1e-12);
    }

    #[test]
    fn frozen_cnot_tables_match_oracle() {
        for control in [Qubit::First, Qubit::Second] {
            assert_eq!(&cnot_pauli_table(control), cnot_table(control));
        }
    }

    #[test]
    fn pauli_kraus_ptm_is_diagonal() {
        let ch = PauliChannel::new(0.5, 0.25, 0.35).unwrap();
        assert!(ptm_of_kraus(&KrausChannel::pauli(&ch)).max_abs_diff(&ch.ptm()) < 1e-12);
    }

    #[test]
    fn t1t2_decay_rates() {
        let ptm = ptm_of_kraus(&t1t2_channel(1.0, 10.0, 1.0));
        let e2 = (-1.0f64).exp();
        let e1 = (-0.1f64).exp();
        assert!((ptm.m[1][1] - e2).abs() < 1e-12);
        assert!((ptm.m[2][2] - e2).abs() < 1e-12);
        assert!((ptm.m[3][3] - e1).abs() < 1e-12);
        assert!((ptm.m[3][0] - (1.0 - e1)).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = PauliVector1Q::new([1.0, 0.3, 0.0, 0.4]);
        let b = PauliVector1Q::new([1.0, 0.0, -0.5, 0.1]);
        let rho = pauli2_to_density(&crate::pauli::tensor(&a, &b)).unwrap();
        let kept = trace_out(&rho, Qubit::Second).unwrap();
        assert!(density_to_pauli(&kept).unwrap().max_abs_diff(&a) < 1e-12);
    }
}
