//! Measurement-only subroutines on a register: classical read/write, state
//! transfer, Bell measurement, Bell-pair preparation through a helper qubit,
//! and teleportation. Each returns its outcome records and the Pauli byproduct
//! implied by them; corrections are always made by further measurements.

mod frame;
pub mod machines;

pub use frame::PauliFrame;

use thiserror::Error;

use crate::quantum::{
    measure, shared_observable, MeasurementRecord, OutcomeSource, Pauli, PauliOp, QuantumError, StateVector,
};
use frame::{pow, xz};

/// Default bound on repeat-until-success loops.
pub const DEFAULT_MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("no success within {0} rounds")]
    RoundLimit(usize),
    #[error("qubits must be pairwise distinct")]
    NotDistinct,
    #[error("qubit {qubit} must be unentangled (purity {purity})")]
    Entangled { qubit: usize, purity: f64 },
    #[error("the destination pool is empty")]
    EmptyPool,
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub outcomes: Vec<MeasurementRecord>,
    pub frame: PauliFrame,
    pub rounds: usize,
    /// Qubit that holds the protocol's output.
    pub output: usize,
}

impl ProtocolResult {
    pub fn bits(&self) -> Vec<u8> {
        self.outcomes.iter().map(|r| r.bit()).collect()
    }
}

/// Performs one named measurement, appending its record.
pub fn measure_step<S: OutcomeSource + ?Sized>(
    reg: &mut StateVector,
    name: &str,
    positions: &[usize],
    source: &mut S,
    records: &mut Vec<MeasurementRecord>,
) -> Result<u8> {
    let obs = shared_observable(name)?;
    let (rec, post) = measure(reg, &obs, positions, source)?;
    *reg = post;
    let bit = rec.bit();
    records.push(rec);
    Ok(bit)
}

/// Runs a fixed measurement sequence and returns the outcome bits.
pub fn run_sequence<S: OutcomeSource + ?Sized>(
    reg: &mut StateVector,
    steps: &[(&str, Vec<usize>)],
    source: &mut S,
    records: &mut Vec<MeasurementRecord>,
) -> Result<Vec<u8>> {
    steps.iter().map(|(name, pos)| measure_step(reg, name, pos, source, records)).collect()
}

fn distinct(qubits: &[usize]) -> Result<()> {
    for (k, q) in qubits.iter().enumerate() {
        if qubits[..k].contains(q) {
            return Err(ProtocolError::NotDistinct);
        }
    }
    Ok(())
}

fn require_pure(reg: &StateVector, qubit: usize) -> Result<()> {
    let purity = reg.single_qubit_purity(qubit)?;
    if purity < 1.0 - 1e-9 {
        return Err(ProtocolError::Entangled { qubit, purity });
    }
    Ok(())
}

/// Reads a cell as a classical bit with a Z-measurement.
pub fn classical_read<S: OutcomeSource + ?Sized>(
    reg: &mut StateVector,
    cell: usize,
    source: &mut S,
) -> Result<(u8, MeasurementRecord)> {
    let mut records = Vec::new();
    let bit = measure_step(reg, "Z", &[cell], source, &mut records)?;
    Ok((bit, records.pop().unwrap()))
}

/// Writes `bit` by repeating (X, Z) until the Z outcome encodes it. At least
/// one round is always performed.
pub fn classical_write<S: OutcomeSource + ?Sized>(
    reg: &mut StateVector,
    cell: usize,
    bit: u8,
    source: &mut S,
    max_rounds: usize,
) -> Result<ProtocolResult> {
    let mut outcomes = Vec::new();
    for round in 1..=max_rounds {
        measure_step(reg, "X", &[cell], source, &mut outcomes)?;
        if measure_step(reg, "Z", &[cell], source, &mut outcomes)? == bit {
            return Ok(ProtocolResult { outcomes, frame: PauliFrame::identity(&[cell]), rounds: round, output: cell });
        }
    }
    Err(ProtocolError::RoundLimit(max_rounds))
}

/// Byproduct of a state transfer with outcome bits `(i, j, k)`: `X^k Z^j X^i`.
pub fn transfer_frame(i: u8, j: u8, k: u8) -> PauliOp {
    pow(Pauli::X, k).mul(&pow(Pauli::Z, j)).mul(&pow(Pauli::X, i))
}

/// Measurements of a transfer from `src` to `dst`: Z on `dst`, X⊗X on both, Z on `src`.
pub fn transfer_sequence(src: usize, dst: usize) -> Vec<(&'static str, Vec<usize>)> {
    vec![("Z", vec![dst]), ("XX", vec![dst, src]), ("Z", vec![src])]
}

/// Moves the state of `src` onto the unentangled qubit `dst`, up to a Pauli frame on `dst`.
pub fn state_transfer<S: OutcomeSource + ?Sized>(
    reg: &mut StateVector,
    src: usize,
    dst: usize,
    source: &mut S,
) -> Result<ProtocolResult> {
    distinct(&[src, dst])?;
    require_pure(reg, dst)?;
    let mut outcomes = Vec::new();
    let b = run_sequence(reg, &transfer_sequence(src, dst), source, &mut outcomes)?;
    let frame = PauliFrame::new(&[dst], transfer_frame(b[0], b[1], b[2]));
    Ok(ProtocolResult { outcomes, frame, rounds: 1, output: dst })
}

/// Transfers repeatedly, cycling through `src` and the pool, until the
/// accumulated frame is the identity.
pub fn state_transfer_until_identity<S: OutcomeSource + ?Sized>(
    reg: &mut StateVector,
    src: usize,
    pool: &[usize],
    source: &mut S,
    max_rounds: usize,
) -> Result<ProtocolResult> {
    if pool.is_empty() {
        return Err(ProtocolError::EmptyPool);
    }
    let mut cycle = vec![src];
    cycle.extend_from_slice(pool);
    distinct(&cycle)?;

    let mut outcomes = Vec::new();
    let mut at = 0;
    let mut op = PauliOp::identity(1);
    for round in 1..=max_rounds {
        let next = (at + 1) % cycle.len();
        let step = state_transfer(reg, cycle[at], cycle[next], source)?;
        outcomes.extend(step.outcomes);
        op = step.frame.op().mul(&op);
        at = next;
        if op.is_identity_up_to_phase() {
            let frame = PauliFrame::new(&[cycle[at]], op);
            return Ok(ProtocolResult { outcomes, frame, rounds: round, output: cycle[at] });
        }
    }
    Err(ProtocolError::RoundLimit(max_rounds))
}

/// Frame on the first qubit after a Bell measurement with bits `(zz, xx)`:
/// the pair is left in `(X^zz Z^xx ⊗ I)(|00> + |11>)/√2`.
pub fn bell_measure_frame(zz: u8, xx: u8) -> PauliOp {
    xz(zz, xx)
}

/// Z⊗Z then X⊗X on `(p, q)`.
pub fn bell_measure<S: OutcomeSource + ?Sized>(
    reg: &mut StateVector,
    p: usize,
    q: usize,
    source: &mut S,
) -> Result<ProtocolResult> {
    distinct(&[p, q])?;
    let mut outcomes = Vec::new();
    let zz = measure_step(reg, "ZZ", &[p, q], source, &mut outcomes)?;
    let xx = measure_step(reg, "XX", &[p, q], source, &mut outcomes)?;
    let frame = PauliFrame::new(&[p], bell_measure_frame(zz, xx));
    Ok(ProtocolResult { outcomes, frame, rounds: 1, output: p })
}

/// Six measurements that leave `(a, b)` in a Bell pair using the helper `c`:
/// Z on a, Z on b, Z on c, X⊗X on (c, a), X⊗X on (c, b), Z on c.
pub fn bell_prepare_sequence(a: usize, b: usize, c: usize) -> Vec<(&'static str, Vec<usize>)> {
    vec![("Z", vec![a]), ("Z", vec![b]), ("Z", vec![c]), ("XX", vec![c, a]), ("XX", vec![c, b]), ("Z", vec![c])]
}

/// Frames of Bell preparation with outcome bits `[i, j, k, l, m, n]`:
/// `(a, b, c) = (X^k Z^l X^i ⊗ X^n Z^m X^j ⊗ X^n)[(|00> + |11>)/√2 ⊗ |0>]`.
pub fn bell_prepare_frames(bits: &[u8; 6]) -> [PauliOp; 3] {
    let [i, j, k, l, m, n] = *bits;
    let fa = pow(Pauli::X, k).mul(&pow(Pauli::Z, l)).mul(&pow(Pauli::X, i));
    let fb = pow(Pauli::X, n).mul(&pow(Pauli::Z, m)).mul(&pow(Pauli::X, j));
    let fc = pow(Pauli::X, n);
    [fa, fb, fc]
}

/// Prepares a Bell pair on `(a, b)` through `c`. The frame covers `(a, b)`.
pub fn bell_prepare_cross_tape<S: OutcomeSource + ?Sized>(
    reg: &mut StateVector,
    a: usize,
    b: usize,
    c: usize,
    source: &mut S,
) -> Result<ProtocolResult> {
    distinct(&[a, b, c])?;
    let mut outcomes = Vec::new();
    let bits = run_sequence(reg, &bell_prepare_sequence(a, b, c), source, &mut outcomes)?;
    let [fa, fb, _] = bell_prepare_frames(&bits.try_into().unwrap());
    let frame = PauliFrame::new(&[a], fa).then(&PauliFrame::new(&[b], fb));
    Ok(ProtocolResult { outcomes, frame, rounds: 1, output: a })
}

/// Frame on the destination of a teleportation, given the Bell-pair frames on
/// `(a, b)` and the Bell-measurement frame on the source.
///
/// With `(a, b) = (Fa ⊗ Fb)Φ+ = (Fa Fb^T ⊗ I)Φ+` and the measured pair in
/// `(σ ⊗ I)Φ+`, the destination holds `Fa Fb^T σ† |ψ>`.
pub fn teleport_frame(fa: &PauliOp, fb: &PauliOp, sigma: &PauliOp) -> PauliOp {
    fa.mul(&fb.transpose()).mul(&sigma.adjoint())
}

/// Teleports `src` onto `a` through the fresh qubits `a`, `b`, `c`.
pub fn teleport<S: OutcomeSource + ?Sized>(
    reg: &mut StateVector,
    src: usize,
    a: usize,
    b: usize,
    c: usize,
    source: &mut S,
) -> Result<ProtocolResult> {
    distinct(&[src, a, b, c])?;
    for q in [a, b, c] {
        require_pure(reg, q)?;
    }
    let prep = bell_prepare_cross_tape(reg, a, b, c, source)?;
    let bm = bell_measure(reg, src, b, source)?;
    let prep_bits: [u8; 6] = prep.bits().try_into().unwrap();
    let [fa, fb, _] = bell_prepare_frames(&prep_bits);
    let op = teleport_frame(&fa, &fb, bm.frame.op());
    let mut outcomes = prep.outcomes;
    outcomes.extend(bm.outcomes);
    Ok(ProtocolResult { outcomes, frame: PauliFrame::new(&[a], op), rounds: 1, output: a })
}
