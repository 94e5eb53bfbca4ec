//! Compilation of {H, T, CNOT, X, Y, Z} circuits into finite-state two-head
//! machines that use measurements only.
//!
//! Each gate has a *step*: a small measurement program that leaves its
//! operands in `σ U |φ>` for a Pauli class `σ` known from the outcomes. The
//! step plus a Pauli-correction loop forms the gate's *full simulation*, and
//! a circuit compiles to the concatenation of full simulations.

mod circuit;
mod machine;
mod step;

pub use circuit::{parse_circuit, Circuit, Gate};
pub use machine::{
    compile_circuit, full_simulation, verify_compiled, SimulationAutomaton, VerifyReport, FIDELITY_TOLERANCE,
};
pub use step::{step_of_simulation, Cond, GateStep, Instr, Loc, ProgramController};

use thiserror::Error;

use crate::machine::MachineError;
use crate::quantum::QuantumError;

/// Cell that the idle head sits on during one-qubit measurements.
pub const PARK_CELL: i64 = -1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

pub type Result<T> = std::result::Result<T, CompileError>;

#[cfg(test)]
mod tests;
