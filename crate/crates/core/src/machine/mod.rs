//! Machine definitions and their operational semantics.
//!
//! A machine is a finite control `delta: (state, last outcome) -> (state,
//! observable, move)` driving `k` measurement heads over qubit tapes. Each
//! transition moves the heads first and then measures the observable on the
//! cells under the heads, in head-declaration order. The machine halts when
//! `delta` has no entry for the current configuration.

mod format;
mod runtime;

pub use format::{parse_machine, write_machine, ParseError};
pub use runtime::{
    AncillaPolicy, Cell, Configuration, PendingMeasurement, RunResult, RunStatus, Runtime, Step, StepRecord,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::quantum::{shared_observable, Observable, QuantumError};

/// Token used as the initial "last outcome" by the machines built in this crate.
pub const INITIAL_TOKEN: &str = "init";

/// An eigenvalue stored exactly enough to be used as a lookup key (units of 1e-9).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Eigenvalue(i64);

impl Eigenvalue {
    pub const PLUS: Eigenvalue = Eigenvalue(1_000_000_000);
    pub const MINUS: Eigenvalue = Eigenvalue(-1_000_000_000);

    pub fn from_f64(value: f64) -> Self {
        Eigenvalue((value * 1e9).round() as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }
}

impl fmt::Display for Eigenvalue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 1_000_000_000 == 0 {
            write!(f, "{:+}", self.0 / 1_000_000_000)
        } else {
            write!(f, "{:+}", self.to_f64())
        }
    }
}

/// Element of the outcome alphabet: a measured eigenvalue or a symbolic token
/// such as the initial outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Value(Eigenvalue),
    Token(String),
}

impl Outcome {
    pub fn value(v: f64) -> Self {
        Outcome::Value(Eigenvalue::from_f64(v))
    }

    pub fn plus() -> Self {
        Outcome::Value(Eigenvalue::PLUS)
    }

    pub fn minus() -> Self {
        Outcome::Value(Eigenvalue::MINUS)
    }

    pub fn token(name: &str) -> Self {
        Outcome::Token(name.to_string())
    }

    pub fn initial() -> Self {
        Outcome::token(INITIAL_TOKEN)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Outcome::Value(e) => Some(e.to_f64()),
            Outcome::Token(_) => None,
        }
    }

    /// `+1 -> 0`, `-1 -> 1`; tokens have no bit.
    pub fn bit(&self) -> Option<u8> {
        self.as_f64().map(crate::quantum::outcome_bit)
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Outcome::plus()
        } else {
            Outcome::minus()
        }
    }

    /// Parses `+1`, `-1`, any real literal with an explicit sign, or a token.
    pub fn parse(text: &str) -> Self {
        if text.starts_with(['+', '-']) {
            if let Ok(v) = text.parse::<f64>() {
                return Outcome::value(v);
            }
        }
        Outcome::Token(text.to_string())
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(e) => write!(f, "{e}"),
            Outcome::Token(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapeLength {
    Finite(usize),
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapeSpec {
    pub id: String,
    pub length: TapeLength,
}

impl TapeSpec {
    pub fn infinite(id: &str) -> Self {
        TapeSpec { id: id.to_string(), length: TapeLength::Infinite }
    }

    pub fn finite(id: &str, length: usize) -> Self {
        TapeSpec { id: id.to_string(), length: TapeLength::Finite(length) }
    }

    /// Finite tapes hold cells `0..length`; infinite tapes every integer.
    pub fn contains(&self, cell: i64) -> bool {
        match self.length {
            TapeLength::Infinite => true,
            TapeLength::Finite(n) => cell >= 0 && (cell as u64) < n as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadSpec {
    pub id: String,
    pub tape: String,
    pub initial_cell: i64,
}

impl HeadSpec {
    pub fn new(id: &str, tape: &str, initial_cell: i64) -> Self {
        HeadSpec { id: id.to_string(), tape: tape.to_string(), initial_cell }
    }
}

/// Allowed displacement of one head per transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveRange {
    Any,
    Bounded(i64, i64),
}

impl MoveRange {
    pub fn contains(self, d: i64) -> bool {
        match self {
            MoveRange::Any => true,
            MoveRange::Bounded(lo, hi) => lo <= d && d <= hi,
        }
    }
}

impl fmt::Display for MoveRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoveRange::Any => write!(f, "any"),
            MoveRange::Bounded(lo, hi) => write!(f, "{lo}..{hi}"),
        }
    }
}

/// Move set `D` as a product of per-head ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveSet(pub Vec<MoveRange>);

impl MoveSet {
    pub fn unbounded(heads: usize) -> Self {
        MoveSet(vec![MoveRange::Any; heads])
    }

    pub fn contains(&self, moves: &[i64]) -> bool {
        moves.len() == self.0.len() && self.0.iter().zip(moves).all(|(r, &d)| r.contains(d))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub next: String,
    pub observable: String,
    pub moves: Vec<i64>,
}

/// A complete machine description.
#[derive(Debug, Clone)]
pub struct MachineSpec {
    pub name: String,
    pub states: BTreeSet<String>,
    pub observables: BTreeMap<String, Arc<Observable>>,
    pub moves: MoveSet,
    pub delta: BTreeMap<(String, Outcome), Transition>,
    pub tapes: Vec<TapeSpec>,
    pub heads: Vec<HeadSpec>,
    pub initial_state: String,
    pub initial_outcome: Outcome,
    pub input_head: String,
    pub output_head: String,
}

impl MachineSpec {
    /// Machine with the given layout, the named builtin observables, an
    /// unbounded move set, and an empty transition table.
    pub fn new(
        name: &str,
        tapes: Vec<TapeSpec>,
        heads: Vec<HeadSpec>,
        observables: &[&str],
    ) -> Result<Self, QuantumError> {
        let observables = observables
            .iter()
            .map(|n| Ok((n.to_string(), shared_observable(n)?)))
            .collect::<Result<_, QuantumError>>()?;
        let first = heads.first().map(|h| h.id.clone()).unwrap_or_default();
        Ok(MachineSpec {
            name: name.to_string(),
            states: BTreeSet::from(["start".to_string()]),
            observables,
            moves: MoveSet::unbounded(heads.len()),
            delta: BTreeMap::new(),
            tapes,
            heads,
            initial_state: "start".to_string(),
            initial_outcome: Outcome::initial(),
            input_head: first.clone(),
            output_head: first,
        })
    }

    pub fn head_count(&self) -> usize {
        self.heads.len()
    }

    pub fn head_index(&self, id: &str) -> Option<usize> {
        self.heads.iter().position(|h| h.id == id)
    }

    pub fn tape_index(&self, id: &str) -> Option<usize> {
        self.tapes.iter().position(|t| t.id == id)
    }

    /// Adds `delta(state, outcome) = (next, observable, moves)`, declaring both states.
    pub fn add_transition(&mut self, state: &str, outcome: Outcome, next: &str, observable: &str, moves: &[i64]) {
        self.states.insert(state.to_string());
        self.states.insert(next.to_string());
        self.delta.insert(
            (state.to_string(), outcome),
            Transition { next: next.to_string(), observable: observable.to_string(), moves: moves.to_vec() },
        );
    }

    pub fn transition(&self, state: &str, outcome: &Outcome) -> Option<&Transition> {
        self.delta.get(&(state.to_string(), outcome.clone()))
    }

    /// The outcome alphabet `V`: every eigenvalue in the observable table plus the initial token.
    pub fn outcome_alphabet(&self) -> BTreeSet<Outcome> {
        let mut v: BTreeSet<Outcome> =
            self.observables.values().flat_map(|o| o.eigenvalues()).map(Outcome::value).collect();
        v.insert(self.initial_outcome.clone());
        v
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Checks every structural invariant; an empty report means well-formed.
    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoHeads,
    EmptyTape(String),
    DuplicateTape(String),
    DuplicateHead(String),
    UnknownTape { head: String, tape: String },
    InitialCellOutOfBounds { head: String, cell: i64 },
    UnknownIoHead(String),
    ObservableArity { observable: String, arity: usize, heads: usize },
    MoveSetArity { arity: usize, heads: usize },
    UnknownInitialState(String),
    UnknownState(String),
    UnknownOutcome { state: String, outcome: String },
    UnknownObservable { state: String, observable: String },
    MoveNotAllowed { state: String, moves: Vec<i64> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoHeads => write!(f, "machine has no heads"),
            Violation::EmptyTape(t) => write!(f, "tape `{t}` has length 0"),
            Violation::DuplicateTape(t) => write!(f, "tape `{t}` declared twice"),
            Violation::DuplicateHead(h) => write!(f, "head `{h}` declared twice"),
            Violation::UnknownTape { head, tape } => write!(f, "head `{head}` refers to unknown tape `{tape}`"),
            Violation::InitialCellOutOfBounds { head, cell } => {
                write!(f, "head `{head}` starts at cell {cell}, outside its tape")
            }
            Violation::UnknownIoHead(h) => write!(f, "input/output head `{h}` is not declared"),
            Violation::ObservableArity { observable, arity, heads } => {
                write!(f, "observable `{observable}` has arity {arity} but the machine has {heads} heads")
            }
            Violation::MoveSetArity { arity, heads } => {
                write!(f, "move set has arity {arity} but the machine has {heads} heads")
            }
            Violation::UnknownInitialState(s) => write!(f, "initial state `{s}` is not declared"),
            Violation::UnknownState(s) => write!(f, "transition uses undeclared state `{s}`"),
            Violation::UnknownOutcome { state, outcome } => {
                write!(f, "transition from `{state}` on `{outcome}` uses an outcome outside the alphabet")
            }
            Violation::UnknownObservable { state, observable } => {
                write!(f, "transition from `{state}` uses undeclared observable `{observable}`")
            }
            Violation::MoveNotAllowed { state, moves } => {
                write!(f, "transition from `{state}` uses move {moves:?} outside the move set")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate(m: &MachineSpec) -> ValidationReport {
    let mut out = Vec::new();
    let k = m.head_count();
    if k == 0 {
        out.push(Violation::NoHeads);
    }
    let mut seen = BTreeSet::new();
    for t in &m.tapes {
        if !seen.insert(&t.id) {
            out.push(Violation::DuplicateTape(t.id.clone()));
        }
        if t.length == TapeLength::Finite(0) {
            out.push(Violation::EmptyTape(t.id.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    for h in &m.heads {
        if !seen.insert(&h.id) {
            out.push(Violation::DuplicateHead(h.id.clone()));
        }
        match m.tapes.iter().find(|t| t.id == h.tape) {
            None => out.push(Violation::UnknownTape { head: h.id.clone(), tape: h.tape.clone() }),
            Some(t) if !t.contains(h.initial_cell) => {
                out.push(Violation::InitialCellOutOfBounds { head: h.id.clone(), cell: h.initial_cell })
            }
            Some(_) => {}
        }
    }
    for io in [&m.input_head, &m.output_head] {
        if m.head_index(io).is_none() {
            out.push(Violation::UnknownIoHead(io.clone()));
        }
    }
    for (name, obs) in &m.observables {
        if obs.arity() != k {
            out.push(Violation::ObservableArity { observable: name.clone(), arity: obs.arity(), heads: k });
        }
    }
    if m.moves.0.len() != k {
        out.push(Violation::MoveSetArity { arity: m.moves.0.len(), heads: k });
    }
    if !m.states.contains(&m.initial_state) {
        out.push(Violation::UnknownInitialState(m.initial_state.clone()));
    }
    let alphabet = m.outcome_alphabet();
    for ((state, outcome), t) in &m.delta {
        for s in [state, &t.next] {
            if !m.states.contains(s) {
                out.push(Violation::UnknownState(s.clone()));
            }
        }
        if !alphabet.contains(outcome) {
            out.push(Violation::UnknownOutcome { state: state.clone(), outcome: outcome.to_string() });
        }
        if !m.observables.contains_key(&t.observable) {
            out.push(Violation::UnknownObservable { state: state.clone(), observable: t.observable.clone() });
        }
        if !m.moves.contains(&t.moves) {
            out.push(Violation::MoveNotAllowed { state: state.clone(), moves: t.moves.clone() });
        }
    }
    ValidationReport { violations: out }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MachineError {
    #[error("invalid machine:\n{0}")]
    Invalid(ValidationReport),
    #[error("input of {qubits} qubits does not fit on tape `{tape}` from cell {offset}")]
    Capacity { tape: String, qubits: usize, offset: i64 },
    #[error("head `{head}` moved to cell {cell}, outside its tape")]
    OutOfBounds { head: String, cell: i64 },
    #[error("heads `{first}` and `{second}` both point at cell {cell} of tape `{tape}`")]
    HeadCoincidence { first: String, second: String, tape: String, cell: i64 },
    #[error("cell {cell} of tape `{tape}` has never been touched")]
    Unmaterialized { tape: String, cell: i64 },
    #[error("the machine has already halted")]
    AlreadyHalted,
    #[error("the machine has not halted")]
    NotHalted,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

impl std::error::Error for ValidationReport {}
