//! Concrete machine families, the classical Turing-machine embedding, and
//! trace-level reductions of two-head programs onto the restricted layouts.

mod classical;
mod program;

pub use classical::{compile_classical_tm, parse_classical_tm, read_classical_cells, ClassicalRun, ClassicalTM};
pub use program::{
    flat_distribution, parse_program, reduction_distribution, simulate_program_on, total_variation, Layout,
    MeasurementProgram, ProgramOp, Reduction, ReductionRun, ReductionState, Weighted,
};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::machine::{HeadSpec, MachineSpec, MoveRange, MoveSet, TapeLength, TapeSpec};
use crate::quantum::QuantumError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown model family `{0}`")]
    UnknownFamily(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("family {0} has no reduction")]
    NoReduction(ModelFamily),
    #[error("run exceeded {0} measurements")]
    StepLimit(usize),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelFamily {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 6] =
        [ModelFamily::A, ModelFamily::B, ModelFamily::C, ModelFamily::D, ModelFamily::E, ModelFamily::F];
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ModelFamily {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        match upper.trim_start_matches("M_") {
            "A" => Ok(ModelFamily::A),
            "B" => Ok(ModelFamily::B),
            "C" => Ok(ModelFamily::C),
            "D" => Ok(ModelFamily::D),
            "E" => Ok(ModelFamily::E),
            "F" => Ok(ModelFamily::F),
            _ => Err(ModelError::UnknownFamily(s.to_string())),
        }
    }
}

/// Two-qubit observables of the two-head family.
pub const OBSERVABLES_A: [&str; 8] = ["XX", "ZZ", "XZ", "ZX", "XI", "ZI", "XX+YX", "XX+XY"];

/// Cross-tape observables of the two-tape families.
pub const OBSERVABLES_D: [&str; 10] = ["XX", "ZZ", "XZ", "ZX", "XI", "ZI", "IX", "IZ", "XX+XY", "XX+YX"];

/// The one-qubit-tape family keeps a single non-Pauli observable.
pub const OBSERVABLES_F: [&str; 9] = ["XX", "ZZ", "XZ", "ZX", "XI", "ZI", "IX", "IZ", "XX+XY"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservableTable {
    Named(Vec<String>),
    /// Any builtin observable of this arity.
    AnyOfArity(usize),
}

impl ObservableTable {
    pub fn allows(&self, name: &str, arity: usize) -> bool {
        match self {
            ObservableTable::Named(names) => names.iter().any(|n| n == name),
            ObservableTable::AnyOfArity(k) => *k == arity,
        }
    }
}

/// Layout, observable table and move set of a family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDescriptor {
    pub family: ModelFamily,
    pub tapes: Vec<TapeSpec>,
    /// Tape index of each head.
    pub head_tapes: Vec<usize>,
    pub observables: ObservableTable,
    pub moves: MoveSet,
}

fn named(names: &[&str]) -> ObservableTable {
    ObservableTable::Named(names.iter().map(|s| s.to_string()).collect())
}

pub fn make_model(family: ModelFamily) -> ModelDescriptor {
    use ModelFamily::*;
    let main = TapeSpec::infinite("main");
    let (tapes, head_tapes, observables, moves) = match family {
        A => (vec![main], vec![0, 0], named(&OBSERVABLES_A), MoveSet::unbounded(2)),
        B => (vec![main], vec![0], ObservableTable::AnyOfArity(1), MoveSet::unbounded(1)),
        C => (vec![main], vec![0], named(&["X", "Z"]), MoveSet(vec![MoveRange::Bounded(-1, 1)])),
        D => (
            vec![TapeSpec::infinite("upper"), TapeSpec::infinite("lower")],
            vec![0, 1],
            named(&OBSERVABLES_D),
            MoveSet::unbounded(2),
        ),
        E => (
            vec![TapeSpec::finite("finite", 2), main],
            vec![0, 1],
            named(&OBSERVABLES_D),
            MoveSet(vec![MoveRange::Bounded(-1, 1), MoveRange::Any]),
        ),
        F => (
            vec![TapeSpec::finite("finite", 1), main],
            vec![0, 1],
            named(&OBSERVABLES_F),
            MoveSet(vec![MoveRange::Bounded(0, 0), MoveRange::Any]),
        ),
    };
    ModelDescriptor { family, tapes, head_tapes, observables, moves }
}

impl ModelDescriptor {
    /// Empty machine in this family. Heads start on cell 0 and are named
    /// `h` (one head) or `h1`, `h2`.
    pub fn machine(&self, name: &str, observables: &[&str]) -> std::result::Result<MachineSpec, QuantumError> {
        let heads: Vec<HeadSpec> = match self.head_tapes.len() {
            1 => vec![HeadSpec::new("h", &self.tapes[self.head_tapes[0]].id, 0)],
            _ => self
                .head_tapes
                .iter()
                .enumerate()
                .map(|(k, &t)| HeadSpec::new(&format!("h{}", k + 1), &self.tapes[t].id, 0))
                .collect(),
        };
        let mut m = MachineSpec::new(name, self.tapes.clone(), heads, observables)?;
        m.moves = self.moves.clone();
        Ok(m)
    }

    /// Reasons why `m` is not a machine of this family; empty if it is.
    pub fn violations(&self, m: &MachineSpec) -> Vec<String> {
        let mut out: Vec<String> = m.validate().violations.iter().map(|v| v.to_string()).collect();
        let lengths = |ts: &[TapeSpec]| ts.iter().map(|t| t.length).collect::<Vec<TapeLength>>();
        if lengths(&m.tapes) != lengths(&self.tapes) {
            out.push(format!("tape layout {:?} differs from {:?}", lengths(&m.tapes), lengths(&self.tapes)));
        }
        let head_tapes: Vec<Option<usize>> = m.heads.iter().map(|h| m.tape_index(&h.tape)).collect();
        if head_tapes != self.head_tapes.iter().map(|&t| Some(t)).collect::<Vec<_>>() {
            out.push(format!("heads sit on tapes {head_tapes:?}, expected {:?}", self.head_tapes));
        }
        for (name, obs) in &m.observables {
            if !self.observables.allows(name, obs.arity()) {
                out.push(format!("observable `{name}` is not in family {}", self.family));
            }
        }
        for ((state, _), t) in &m.delta {
            if !self.moves.contains(&t.moves) {
                out.push(format!("move {:?} from `{state}` is not in family {}", t.moves, self.family));
            }
        }
        out
    }

    pub fn admits(&self, m: &MachineSpec) -> bool {
        self.violations(m).is_empty()
    }
}

#[cfg(test)]
mod tests;
