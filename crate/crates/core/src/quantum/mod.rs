//! Dense state-vector registers and projective measurement.
//!
//! Qubit 0 is the leftmost tensor factor: in a register of `n` qubits the
//! basis index `i` is the bit string `q0 q1 .. q(n-1)` with `q0` as the most
//! significant bit. Multi-qubit operators follow the same order over the
//! positions they are applied to.

mod branching;
mod observable;
mod outcome;
mod pauli;
mod state;

pub use branching::{explore, state_key, Branch, ControlAction, Controller, Exploration, ExploreLimits};
pub use observable::{builtin_observable, shared_observable, spectral_decompose, Observable, SpectralProjector};
pub use outcome::{
    enumerate_paths, outcome_bit, EnumeratedPath, ForcedOutcomes, MeasurementRecord, OutcomeSource, PathScript,
};
pub use pauli::{Pauli, PauliOp};
pub use state::{fidelity_up_to_global_phase, measure, outcome_distribution, DistributionEntry, StateVector};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Outcomes whose probability falls below this value are never sampled.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Tolerance on normalization and on projector algebra.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Eigenvalues closer than this are merged into one spectral projector.
pub const EIGENVALUE_MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix of size {rows}x{cols} is not a square power-of-two operator")]
    BadShape { rows: usize, cols: usize },
    #[error("operator acts on {expected} qubits but {got} positions were given")]
    ArityMismatch { expected: usize, got: usize },
    #[error("qubit position {0} is repeated")]
    RepeatedPosition(usize),
    #[error("qubit position {position} is out of range for a {num_qubits}-qubit register")]
    OutOfRange { position: usize, num_qubits: usize },
    #[error("registers have different sizes ({0} and {1} qubits)")]
    DimensionMismatch(usize, usize),
    #[error("amplitude vector has length {0}, which is not a power of two")]
    BadLength(usize),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("subsystem is entangled with the rest of the register (purity {0})")]
    Entangled(f64),
    #[error("forced outcome {0} is impossible or the outcome script is exhausted")]
    ForcedOutcome(f64),
}

pub type Result<T, E = QuantumError> = std::result::Result<T, E>;

pub(crate) fn check_positions(positions: &[usize], num_qubits: usize) -> Result<()> {
    for (k, &p) in positions.iter().enumerate() {
        if p >= num_qubits {
            return Err(QuantumError::OutOfRange { position: p, num_qubits });
        }
        if positions[..k].contains(&p) {
            return Err(QuantumError::RepeatedPosition(p));
        }
    }
    Ok(())
}
