//! Pauli-Liouville representation of one- and two-qubit states and processes.
//!
//! States are real coefficient vectors over the Pauli basis `(I, X, Y, Z)`
//! (normalised so that `x_I = Tr[ρ] = 1`), single-qubit processes are 4×4
//! Pauli transfer matrices, and Pauli channels are diagonal PTMs
//! `diag(1, q_X, q_Y, q_Z)`.
//!
//! Two-qubit vectors use row-major order over `(P_first, P_second)`, so the
//! coefficient of `P ⊗ Q` lives at index `4 * P + Q`.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Slack used for every physicality check in this module.
pub const PHYSICAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("channel parameter {name} = {value} is outside [-1, 1]")]
    ParameterOutOfRange { name: &'static str, value: f64 },
    #[error("channel (q_X, q_Y, q_Z) = ({0}, {1}, {2}) is not completely positive")]
    NotCompletelyPositive(f64, f64, f64),
    #[error("error probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("state is not physical: measurement probability {0} outside [0, 1]")]
    NonPhysical(f64),
    #[error("cannot compose an empty list of channels")]
    EmptyComposition,
}

/// Single-qubit Pauli operators, in basis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i]
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Which of the two qubits of a [`PauliVector2Q`] an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    First,
    Second,
}

impl Qubit {
    pub fn other(self) -> Qubit {
        match self {
            Qubit::First => Qubit::Second,
            Qubit::Second => Qubit::First,
        }
    }
}

/// The channel parameter a protocol run is sensitive to.
///
/// Protocols always prepare and measure in `Z`; the `X` and `Y` parameters are
/// reached by dressing every channel on the route (see [`Dressing`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// Dressing that moves this basis' parameter into the `Z` slot.
    pub fn dressing(self) -> Dressing {
        match self {
            Basis::X => Dressing::Hadamard,
            Basis::Y => Dressing::HadamardPhase,
            Basis::Z => Dressing::None,
        }
    }

    pub fn pauli(self) -> Pauli {
        match self {
            Basis::X => Pauli::X,
            Basis::Y => Pauli::Y,
            Basis::Z => Pauli::Z,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pauli())
    }
}

/// Conjugation applied around a channel: `U† ∘ P ∘ U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dressing {
    None,
    /// `H` before and after the channel; swaps the `X` and `Z` parameters.
    Hadamard,
    /// `S·H` before and `H·S†` after; brings `q_Y` into the `Z` slot.
    HadamardPhase,
}

impl Dressing {
    /// The gate applied before the channel, if any.
    pub fn gate(self) -> Option<Gate> {
        match self {
            Dressing::None => None,
            Dressing::Hadamard => Some(Gate::Hadamard),
            Dressing::HadamardPhase => Some(Gate::HadamardPhase),
        }
    }
}

/// Gates available at network nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    Hadamard,
    /// `S = diag(1, i)`.
    Phase,
    /// `H` followed by `S`, i.e. the unitary `S·H`. Maps `Z → Y`.
    HadamardPhase,
    CnotControlFirst,
    CnotControlSecond,
}

impl Gate {
    /// PTM of a single-qubit gate, `None` for the two-qubit CNOTs.
    pub fn ptm(self) -> Option<Ptm1Q> {
        match self {
            Gate::Hadamard => Some(Ptm1Q::hadamard()),
            Gate::Phase => Some(Ptm1Q::phase()),
            Gate::HadamardPhase => Some(Ptm1Q::phase().compose(&Ptm1Q::hadamard())),
            Gate::CnotControlFirst | Gate::CnotControlSecond => None,
        }
    }
}

/// Pauli coefficient vector `[x_I, x_X, x_Y, x_Z]` of a single-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliVector1Q {
    pub coeffs: [f64; 4],
}

impl PauliVector1Q {
    pub const fn new(coeffs: [f64; 4]) -> Self {
        Self { coeffs }
    }

    /// `|0⟩ = [1, 0, 0, 1]`.
    pub const fn zero() -> Self {
        Self::new([1.0, 0.0, 0.0, 1.0])
    }

    /// `|1⟩ = [1, 0, 0, -1]`.
    pub const fn one() -> Self {
        Self::new([1.0, 0.0, 0.0, -1.0])
    }

    /// `|+⟩ = [1, 1, 0, 0]`.
    pub const fn plus() -> Self {
        Self::new([1.0, 1.0, 0.0, 0.0])
    }

    pub const fn maximally_mixed() -> Self {
        Self::new([1.0, 0.0, 0.0, 0.0])
    }

    /// Noisy `|0⟩` preparation `[1, 0, 0, s]`.
    pub const fn z_state(s: f64) -> Self {
        Self::new([1.0, 0.0, 0.0, s])
    }

    pub fn coeff(&self, p: Pauli) -> f64 {
        self.coeffs[p.index()]
    }

    pub fn bloch_norm_sq(&self) -> f64 {
        self.coeffs[1..].iter().map(|c| c * c).sum()
    }

    /// Normalised and inside the Bloch ball, both up to [`PHYSICAL_TOL`].
    pub fn is_physical(&self) -> bool {
        (self.coeffs[0] - 1.0).abs() <= PHYSICAL_TOL && self.bloch_norm_sq() <= 1.0 + PHYSICAL_TOL
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Pauli coefficient vector of a two-qubit state; index `4 * P + Q` holds `P ⊗ Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliVector2Q {
    pub coeffs: [f64; 16],
}

impl PauliVector2Q {
    pub const fn new(coeffs: [f64; 16]) -> Self {
        Self { coeffs }
    }

    pub fn maximally_mixed() -> Self {
        let mut coeffs = [0.0; 16];
        coeffs[0] = 1.0;
        Self { coeffs }
    }

    pub fn index(first: Pauli, second: Pauli) -> usize {
        4 * first.index() + second.index()
    }

    pub fn coeff(&self, first: Pauli, second: Pauli) -> f64 {
        self.coeffs[Self::index(first, second)]
    }

    pub fn set(&mut self, first: Pauli, second: Pauli, value: f64) {
        self.coeffs[Self::index(first, second)] = value;
    }

    /// Apply a single-qubit PTM to one of the two qubits.
    pub fn apply_local(&self, m: &Ptm1Q, qubit: Qubit) -> PauliVector2Q {
        let mut out = [0.0; 16];
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += match qubit {
                        Qubit::First => m.m[a][k] * self.coeffs[4 * k + b],
                        Qubit::Second => m.m[b][k] * self.coeffs[4 * a + k],
                    };
                }
                out[4 * a + b] = acc;
            }
        }
        PauliVector2Q::new(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Parameters `(q_X, q_Y, q_Z)` of a completely positive single-qubit Pauli channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel", into = "RawChannel")]
pub struct PauliChannel {
    q: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct RawChannel {
    q_x: f64,
    q_y: f64,
    q_z: f64,
}

impl TryFrom<RawChannel> for PauliChannel {
    type Error = AlgebraError;
    fn try_from(r: RawChannel) -> Result<Self, Self::Error> {
        PauliChannel::new(r.q_x, r.q_y, r.q_z)
    }
}

impl From<PauliChannel> for RawChannel {
    fn from(c: PauliChannel) -> Self {
        RawChannel {
            q_x: c.q[0],
            q_y: c.q[1],
            q_z: c.q[2],
        }
    }
}

impl PauliChannel {
    /// Validates range and complete positivity (all `p_P ≥ 0`).
    pub fn new(q_x: f64, q_y: f64, q_z: f64) -> Result<Self, AlgebraError> {
        for (name, value) in [("q_X", q_x), ("q_Y", q_y), ("q_Z", q_z)] {
            if !value.is_finite() || value.abs() > 1.0 + PHYSICAL_TOL {
                return Err(AlgebraError::ParameterOutOfRange { name, value });
            }
        }
        let ch = Self { q: [q_x, q_y, q_z] };
        if ch.probabilities().iter().any(|&p| p < -PHYSICAL_TOL) {
            return Err(AlgebraError::NotCompletelyPositive(q_x, q_y, q_z));
        }
        Ok(ch)
    }

    /// Build from the error probabilities `p_X, p_Y, p_Z`.
    pub fn from_probabilities(p_x: f64, p_y: f64, p_z: f64) -> Result<Self, AlgebraError> {
        for p in [p_x, p_y, p_z, 1.0 - p_x - p_y - p_z] {
            if !(-PHYSICAL_TOL..=1.0 + PHYSICAL_TOL).contains(&p) {
                return Err(AlgebraError::ProbabilityOutOfRange(p));
            }
        }
        Self::new(
            1.0 - 2.0 * (p_y + p_z),
            1.0 - 2.0 * (p_x + p_z),
            1.0 - 2.0 * (p_x + p_y),
        )
    }

    pub fn identity() -> Self {
        Self { q: [1.0, 1.0, 1.0] }
    }

    /// `(1-p)ρ + p XρX`, PTM `diag(1, 1, 1-2p, 1-2p)`.
    pub fn bit_flip(p: f64) -> Result<Self, AlgebraError> {
        Self::from_probabilities(p, 0.0, 0.0)
    }

    /// `(1-p)ρ + p ZρZ`, PTM `diag(1, 1-2p, 1-2p, 1)`.
    pub fn phase_flip(p: f64) -> Result<Self, AlgebraError> {
        Self::from_probabilities(0.0, 0.0, p)
    }

    /// `(1-p)ρ + p YρY`, PTM `diag(1, 1-2p, 1, 1-2p)`.
    pub fn bit_phase_flip(p: f64) -> Result<Self, AlgebraError> {
        Self::from_probabilities(0.0, p, 0.0)
    }

    /// Depolarizing channel with mixing probability `p`, PTM `diag(1, 1-p, 1-p, 1-p)`.
    pub fn depolarizing(p: f64) -> Result<Self, AlgebraError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(AlgebraError::ProbabilityOutOfRange(p));
        }
        let q = 1.0 - p;
        Self::new(q, q, q)
    }

    pub fn q_x(&self) -> f64 {
        self.q[0]
    }

    pub fn q_y(&self) -> f64 {
        self.q[1]
    }

    pub fn q_z(&self) -> f64 {
        self.q[2]
    }

    pub fn q(&self, basis: Basis) -> f64 {
        match basis {
            Basis::X => self.q[0],
            Basis::Y => self.q[1],
            Basis::Z => self.q[2],
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.q
    }

    /// `[p_I, p_X, p_Y, p_Z]`.
    pub fn probabilities(&self) -> [f64; 4] {
        let [x, y, z] = self.q;
        [
            (1.0 + x + y + z) / 4.0,
            (1.0 + x - y - z) / 4.0,
            (1.0 - x + y - z) / 4.0,
            (1.0 - x - y + z) / 4.0,
        ]
    }

    /// True if any parameter is zero; tomography protocols reject such channels.
    pub fn has_zero_parameter(&self) -> bool {
        self.q.contains(&0.0)
    }

    pub fn ptm(&self) -> Ptm1Q {
        ptm_of_channel(self)
    }

    pub fn dress(&self, dressing: Dressing) -> PauliChannel {
        dress_channel(self, dressing)
    }
}

/// Single-qubit Pauli transfer matrix, `m[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ptm1Q {
    pub m: [[f64; 4]; 4],
}

impl Ptm1Q {
    pub const fn new(m: [[f64; 4]; 4]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self::diag([1.0; 4])
    }

    pub fn diag(d: [f64; 4]) -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, v) in d.into_iter().enumerate() {
            m[i][i] = v;
        }
        Self { m }
    }

    /// `I→I, X→Z, Y→-Y, Z→X`.
    pub fn hadamard() -> Self {
        Self::new([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ])
    }

    /// `I→I, X→Y, Y→-X, Z→Z`.
    pub fn phase() -> Self {
        Self::new([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    /// Matrix product `self · other`: `other` acts first.
    pub fn compose(&self, other: &Ptm1Q) -> Ptm1Q {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Ptm1Q { m }
    }

    /// Inverse of a unitary gate's PTM (PTMs of unitaries are orthogonal).
    pub fn transpose(&self) -> Ptm1Q {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.m[j][i];
            }
        }
        Ptm1Q { m }
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [self.m[0][0], self.m[1][1], self.m[2][2], self.m[3][3]]
    }

    pub fn is_trace_preserving(&self) -> bool {
        (self.m[0][0] - 1.0).abs() <= PHYSICAL_TOL
            && self.m[0][1..].iter().all(|v| v.abs() <= PHYSICAL_TOL)
    }

    pub fn max_abs_diff(&self, other: &Ptm1Q) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }
}

/// `diag(1, q_X, q_Y, q_Z)`.
pub fn ptm_of_channel(params: &PauliChannel) -> Ptm1Q {
    let [x, y, z] = params.q;
    Ptm1Q::diag([1.0, x, y, z])
}

pub fn apply_ptm(m: &Ptm1Q, v: &PauliVector1Q) -> PauliVector1Q {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|k| m.m[i][k] * v.coeffs[k]).sum();
    }
    PauliVector1Q::new(out)
}

/// Product rule: `coeff(P ⊗ Q) = a(P) · b(Q)`.
pub fn tensor(a: &PauliVector1Q, b: &PauliVector1Q) -> PauliVector2Q {
    let mut out = [0.0; 16];
    for p in 0..4 {
        for q in 0..4 {
            out[4 * p + q] = a.coeffs[p] * b.coeffs[q];
        }
    }
    PauliVector2Q::new(out)
}

/// CNOT conjugation with the first qubit as control: basis element `k` maps to
/// `sign * basis[image]`, stored as `(image, sign)`.
const CNOT_CONTROL_FIRST: [(usize, i8); 16] = [
    (0, 1),
    (1, 1),
    (14, 1),
    (15, 1),
    (5, 1),
    (4, 1),
    (11, 1),
    (10, -1),
    (9, 1),
    (8, 1),
    (7, -1),
    (6, 1),
    (12, 1),
    (13, 1),
    (2, 1),
    (3, 1),
];

/// As [`CNOT_CONTROL_FIRST`] with the second qubit as control.
const CNOT_CONTROL_SECOND: [(usize, i8); 16] = [
    (0, 1),
    (5, 1),
    (6, 1),
    (3, 1),
    (4, 1),
    (1, 1),
    (2, 1),
    (7, 1),
    (11, 1),
    (14, 1),
    (13, -1),
    (8, 1),
    (15, 1),
    (10, -1),
    (9, 1),
    (12, 1),
];

/// Signed permutation table for the CNOT with the given control qubit.
pub fn cnot_table(control: Qubit) -> &'static [(usize, i8); 16] {
    match control {
        Qubit::First => &CNOT_CONTROL_FIRST,
        Qubit::Second => &CNOT_CONTROL_SECOND,
    }
}

pub fn apply_cnot(v: &PauliVector2Q, control: Qubit) -> PauliVector2Q {
    let mut out = [0.0; 16];
    for (k, &(image, sign)) in cnot_table(control).iter().enumerate() {
        out[image] = f64::from(sign) * v.coeffs[k];
    }
    PauliVector2Q::new(out)
}

/// Keep the coefficients whose discarded slot carries `I`.
pub fn partial_trace(v: &PauliVector2Q, discard: Qubit) -> PauliVector1Q {
    let mut out = [0.0; 4];
    for (p, o) in out.iter_mut().enumerate() {
        *o = match discard {
            Qubit::First => v.coeffs[p],
            Qubit::Second => v.coeffs[4 * p],
        };
    }
    PauliVector1Q::new(out)
}

fn check_probability(p: f64) -> Result<f64, AlgebraError> {
    if (-PHYSICAL_TOL..=1.0 + PHYSICAL_TOL).contains(&p) {
        Ok(p)
    } else {
        Err(AlgebraError::NonPhysical(p))
    }
}

/// Ideal `Z` measurement: `((1 + x_Z)/2, (1 - x_Z)/2)`.
pub fn z_measurement_probs(v: &PauliVector1Q) -> Result<(f64, f64), AlgebraError> {
    z_measurement_probs_noisy(v, 1.0)
}

/// `Z` measurement with effective measurement operator `[1, 0, 0, m]`.
pub fn z_measurement_probs_noisy(v: &PauliVector1Q, m: f64) -> Result<(f64, f64), AlgebraError> {
    let p0 = check_probability((1.0 + m * v.coeffs[3]) / 2.0)?;
    Ok((p0, 1.0 - p0))
}

/// Joint `Z ⊗ Z` measurement with measurement fidelity `m` on both qubits.
///
/// Returns `[P(00), P(01), P(10), P(11)]`, first qubit as the leading bit.
pub fn joint_z_measurement_probs(v: &PauliVector2Q, m: f64) -> Result<[f64; 4], AlgebraError> {
    let zz = v.coeff(Pauli::Z, Pauli::Z);
    let zi = v.coeff(Pauli::Z, Pauli::I);
    let iz = v.coeff(Pauli::I, Pauli::Z);
    let ii = v.coeff(Pauli::I, Pauli::I);
    let mut out = [0.0; 4];
    for (idx, o) in out.iter_mut().enumerate() {
        let a = if idx & 0b10 == 0 { 1.0 } else { -1.0 };
        let b = if idx & 0b01 == 0 { 1.0 } else { -1.0 };
        // ⟨⟨M_a ⊗ M_b | v⟩⟩ with M_0 = [1,0,0,m], M_1 = [1,0,0,-m]
        *o = check_probability((ii + a * m * zi + b * m * iz + a * b * m * m * zz) / 4.0)?;
    }
    Ok(out)
}

/// Conjugate a channel by the dressing gates; permutes `(q_X, q_Y, q_Z)`.
pub fn dress_channel(params: &PauliChannel, dressing: Dressing) -> PauliChannel {
    let [x, y, z] = params.q;
    let q = match dressing {
        Dressing::None => [x, y, z],
        Dressing::Hadamard => [z, y, x],
        Dressing::HadamardPhase => [z, x, y],
    };
    PauliChannel { q }
}

/// At least one of `q_X, q_Y, q_Z` within `tol` of one, i.e. at least two unit
/// entries on the PTM diagonal.
pub fn is_bypassable(params: &PauliChannel, tol: f64) -> bool {
    bypass_bases(params, tol).next().is_some()
}

/// Bases whose Pauli operator passes through the channel unchanged.
pub fn bypass_bases(params: &PauliChannel, tol: f64) -> impl Iterator<Item = Basis> + '_ {
    Basis::ALL
        .into_iter()
        .filter(move |&b| (params.q(b) - 1.0).abs() <= tol)
}

/// Composite of a path of channels; diagonal PTMs multiply componentwise.
pub fn compose_channels(path: &[PauliChannel]) -> Result<PauliChannel, AlgebraError> {
    let (first, rest) = path.split_first().ok_or(AlgebraError::EmptyComposition)?;
    let mut q = first.q;
    for ch in rest {
        for (acc, v) in q.iter_mut().zip(ch.q) {
            *acc *= v;
        }
    }
    Ok(PauliChannel { q })
}

/// Product of the `basis` parameters along a path (empty path gives 1).
pub fn path_product(path: &[PauliChannel], basis: Basis) -> f64 {
    path.iter().map(|c| c.q(basis)).product()
}
