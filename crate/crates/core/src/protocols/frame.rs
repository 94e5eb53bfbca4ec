use std::fmt;

use crate::quantum::{Pauli, PauliOp, Result, StateVector};

/// Pauli byproduct on a set of register qubits.
///
/// The frame `F` means the protocol left the register in `F|target>`, so the
/// intended state is recovered (up to global phase) by applying `F^-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliFrame {
    qubits: Vec<usize>,
    op: PauliOp,
}

impl PauliFrame {
    pub fn identity(qubits: &[usize]) -> Self {
        PauliFrame { qubits: qubits.to_vec(), op: PauliOp::identity(qubits.len()) }
    }

    pub fn new(qubits: &[usize], op: PauliOp) -> Self {
        assert_eq!(qubits.len(), op.arity(), "frame arity mismatch");
        PauliFrame { qubits: qubits.to_vec(), op }
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        PauliFrame::new(&[qubit], PauliOp::single(p))
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn op(&self) -> &PauliOp {
        &self.op
    }

    /// Pauli class acting on `qubit` (identity if untracked).
    pub fn get(&self, qubit: usize) -> Pauli {
        self.qubits.iter().position(|&q| q == qubit).map_or(Pauli::I, |k| self.op.labels()[k])
    }

    pub fn is_identity(&self) -> bool {
        self.op.is_identity_up_to_phase()
    }

    fn widened(&self, qubits: &[usize]) -> PauliOp {
        let labels = qubits.iter().map(|&q| self.get(q)).collect();
        PauliOp::new(labels, self.op.phase())
    }

    /// The frame of applying `self` first and `later` afterwards (`later * self`).
    pub fn then(&self, later: &PauliFrame) -> PauliFrame {
        let mut qubits = self.qubits.clone();
        qubits.extend(later.qubits.iter().filter(|q| !self.qubits.contains(q)));
        let op = later.widened(&qubits).mul(&self.widened(&qubits));
        PauliFrame { qubits, op }
    }

    /// Restriction to a subset of qubits, keeping the phase.
    pub fn restrict(&self, qubits: &[usize]) -> PauliFrame {
        PauliFrame { qubits: qubits.to_vec(), op: self.widened(qubits) }
    }

    /// The same operator attached to different qubits.
    pub fn relabel(&self, qubits: &[usize]) -> PauliFrame {
        PauliFrame::new(qubits, self.op.clone())
    }

    /// Applies the frame to `state`. Test-oracle use only.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        state.apply_pauli(&self.op, &self.qubits)
    }

    /// Applies the inverse frame to `state`. Test-oracle use only.
    pub fn undo(&self, state: &StateVector) -> Result<StateVector> {
        state.apply_pauli(&self.op.adjoint(), &self.qubits)
    }
}

impl fmt::Display for PauliFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qubits: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(f, "{}@[{}]", self.op, qubits.join(","))
    }
}

/// `X^x Z^z` with exponents given as bits.
pub(crate) fn xz(x: u8, z: u8) -> PauliOp {
    pow(Pauli::X, x).mul(&pow(Pauli::Z, z))
}

pub(crate) fn pow(p: Pauli, bit: u8) -> PauliOp {
    if bit == 0 {
        PauliOp::identity(1)
    } else {
        PauliOp::single(p)
    }
}
