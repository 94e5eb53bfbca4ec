//! Simulator and compiler for measurement-only quantum Turing machines.
//!
//! Machines act on tapes of qubits solely by projective measurement. The
//! crate runs them, enumerates their execution trees, checks the standard
//! measurement protocols, and compiles circuits and classical Turing
//! machines into them.

pub mod compiler;
pub mod exec_tree;
pub mod machine;
pub mod models;
pub mod protocols;
pub mod quantum;

pub use compiler::{compile_circuit, parse_circuit, verify_compiled, Circuit, Gate};
pub use exec_tree::{build_tree, sample_path, termination_probability_bounds, ExecutionTree, TreeLimits};
pub use machine::{
    parse_machine, write_machine, AncillaPolicy, Cell, MachineSpec, Outcome, RunStatus, Runtime, TapeSpec,
};
pub use models::{make_model, ModelFamily};
pub use quantum::{fidelity_up_to_global_phase, Observable, OutcomeSource, Pauli, PauliOp, StateVector, C64};
