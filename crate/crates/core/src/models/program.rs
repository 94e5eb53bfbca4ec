use std::fmt;
use std::sync::Arc;

use super::{ModelError, ModelFamily, Result, OBSERVABLES_A};
use crate::protocols::PauliFrame;
use crate::quantum::{
    enumerate_paths, explore, fidelity_up_to_global_phase, measure, outcome_bit, shared_observable, ControlAction,
    Controller, ExploreLimits, MeasurementRecord, Observable, OutcomeSource, PathScript, Pauli, PauliOp, StateVector,
};

/// One two-head measurement of a program, on logical qubits `(i, j)`.
///
/// `XI` and `ZI` act on `i` alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramOp {
    pub observable: String,
    pub qubits: [usize; 2],
}

/// A straight-line sequence of two-head measurements over logical qubits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MeasurementProgram {
    pub ops: Vec<ProgramOp>,
}

impl MeasurementProgram {
    pub fn new(ops: Vec<ProgramOp>) -> Result<Self> {
        for op in &ops {
            if !OBSERVABLES_A.contains(&op.observable.as_str()) {
                return Err(ModelError::Invalid(format!(
                    "observable `{}` is not a two-head observable",
                    op.observable
                )));
            }
            if op.qubits[0] == op.qubits[1] {
                return Err(ModelError::Invalid(format!("`{}` acts twice on qubit {}", op.observable, op.qubits[0])));
            }
        }
        Ok(MeasurementProgram { ops })
    }

    pub fn op(observable: &str, i: usize, j: usize) -> ProgramOp {
        ProgramOp { observable: observable.into(), qubits: [i, j] }
    }

    /// Smallest register that holds every index used.
    pub fn qubit_count(&self) -> usize {
        self.ops.iter().flat_map(|o| o.qubits).map(|q| q + 1).max().unwrap_or(0)
    }
}

impl fmt::Display for MeasurementProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            writeln!(f, "{} {} {}", op.observable, op.qubits[0], op.qubits[1])?;
        }
        Ok(())
    }
}

/// Parses rows `OBS i j`; `#` starts a comment.
pub fn parse_program(text: &str) -> Result<MeasurementProgram> {
    let mut ops = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| ModelError::Parse { line: k + 1, message };
        let w: Vec<&str> = body.split_whitespace().collect();
        if w.len() != 3 {
            return Err(err("expected `OBS i j`".into()));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad qubit index `{s}`")));
        ops.push(MeasurementProgram::op(w[0], idx(w[1])?, idx(w[2])?));
    }
    MeasurementProgram::new(ops).map_err(|e| match e {
        ModelError::Invalid(m) => ModelError::Parse { line: 0, message: m },
        e => e,
    })
}

/// Where every register position lives in a family's tapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub family: ModelFamily,
    /// `(tape, cell)` of each register position.
    pub sites: Vec<(usize, i64)>,
    /// Register position of each logical qubit.
    pub homes: Vec<usize>,
    /// Auxiliary positions per tape.
    pub aux: Vec<Vec<usize>>,
}

impl Layout {
    /// Logical qubits first, then auxiliaries. The two-tape layout puts odd
    /// indices on the upper tape and even ones on the lower tape, each at cell
    /// `3 * index`; auxiliaries take cells between them.
    pub fn new(family: ModelFamily, logical: usize) -> Result<Self> {
        let mut sites = Vec::new();
        let mut aux: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
        let mut add_aux = |sites: &mut Vec<(usize, i64)>, tape: usize, cell: i64| {
            aux[tape].push(sites.len());
            sites.push((tape, cell));
        };
        match family {
            ModelFamily::A => {
                sites.extend((0..logical).map(|l| (0, l as i64)));
            }
            ModelFamily::D => {
                sites.extend((0..logical).map(|l| (if l % 2 == 1 { 0 } else { 1 }, 3 * l as i64)));
                for tape in 0..2 {
                    add_aux(&mut sites, tape, 1);
                    add_aux(&mut sites, tape, 2);
                }
            }
            ModelFamily::E => {
                sites.extend((0..logical).map(|l| (1, 3 * l as i64)));
                add_aux(&mut sites, 0, 0);
                add_aux(&mut sites, 0, 1);
                add_aux(&mut sites, 1, 1);
            }
            ModelFamily::F => {
                sites.extend((0..logical).map(|l| (1, l as i64)));
                add_aux(&mut sites, 0, 0);
            }
            f => return Err(ModelError::NoReduction(f)),
        }
        Ok(Layout { family, sites, homes: (0..logical).collect(), aux })
    }

    pub fn tape(&self, position: usize) -> usize {
        self.sites[position].0
    }

    pub fn size(&self) -> usize {
        self.sites.len()
    }

    /// Any position on the other tape, used as the identity slot of a
    /// one-qubit observable.
    fn partner(&self, position: usize) -> usize {
        let t = self.tape(position);
        (0..self.size()).find(|&q| self.tape(q) != t).expect("two-tape layout")
    }
}

#[derive(Debug, Clone)]
enum Effect {
    /// An outcome bit of 1 multiplies the logical qubit's frame by `flip`.
    Frame { logical: usize, flip: Pauli },
    /// A program measurement: the outcome is recorded after undoing the sign
    /// that the frames of the measured qubits impose on `term`.
    Record { logicals: Vec<Option<usize>>, term: PauliOp },
}

#[derive(Debug, Clone)]
enum Step {
    Measure {
        observable: Arc<Observable>,
        positions: Vec<usize>,
        effect: Effect,
    },
    /// Continues at `target` when the frame of `logical` is I or Z.
    SkipIfDiagonal {
        logical: usize,
        target: usize,
    },
    Jump(usize),
}

/// Classical control of a reduction: program counter, the Pauli class of
/// each logical qubit, and the frame-corrected program outcomes so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReductionState {
    pub pc: usize,
    pub frames: Vec<Pauli>,
    pub outcomes: Vec<u8>,
}

/// A measurement program rewritten for one family's layout.
///
/// Two-qubit measurements whose operands share a tape are done after moving
/// one operand across: by teleportation in the two-tape families and by state
/// transfer in the one-qubit-tape family. Frames are tracked, not corrected,
/// except before a non-Pauli measurement, where the qubit carrying its `Y`
/// term is moved away and back until its frame is I or Z.
#[derive(Debug, Clone)]
pub struct Reduction {
    layout: Layout,
    steps: Vec<Step>,
}

struct Builder<'a> {
    layout: &'a Layout,
    steps: Vec<Step>,
}

fn swap_name(name: &str) -> String {
    name.split('+').map(|t| t.chars().rev().collect::<String>()).collect::<Vec<_>>().join("+")
}

fn first_term(name: &str) -> PauliOp {
    name.split('+').next().unwrap().parse().expect("builtin names are Pauli sums")
}

impl Builder<'_> {
    fn push(&mut self, name: &str, positions: Vec<usize>, effect: Effect) -> Result<()> {
        let observable = shared_observable(name)?;
        self.steps.push(Step::Measure { observable, positions, effect });
        Ok(())
    }

    fn single(&mut self, letter: char, p: usize, effect: Effect) -> Result<()> {
        let q = self.layout.partner(p);
        if self.layout.tape(p) == 0 {
            self.push(&format!("{letter}I"), vec![p, q], effect)
        } else {
            self.push(&format!("I{letter}"), vec![q, p], effect)
        }
    }

    /// A symmetric two-qubit observable across the two tapes.
    fn across(&mut self, name: &str, p: usize, q: usize, effect: Effect) -> Result<()> {
        assert_ne!(self.layout.tape(p), self.layout.tape(q), "{name} within one tape");
        let pos = if self.layout.tape(p) == 0 { vec![p, q] } else { vec![q, p] };
        self.push(name, pos, effect)
    }

    fn frame(logical: usize, flip: Pauli) -> Effect {
        Effect::Frame { logical, flip }
    }

    fn transfer(&mut self, l: usize, src: usize, dst: usize) -> Result<()> {
        self.single('Z', dst, Self::frame(l, Pauli::X))?;
        self.across("XX", dst, src, Self::frame(l, Pauli::Z))?;
        self.single('Z', src, Self::frame(l, Pauli::X))
    }

    fn teleport(&mut self, l: usize, src: usize, dst: usize, partner: usize, helper: usize) -> Result<()> {
        let fx = || Self::frame(l, Pauli::X);
        let fz = || Self::frame(l, Pauli::Z);
        self.single('Z', dst, fx())?;
        self.single('Z', partner, fx())?;
        self.single('Z', helper, fx())?;
        self.across("XX", helper, dst, fz())?;
        self.across("XX", helper, partner, fz())?;
        self.single('Z', helper, fx())?;
        self.across("ZZ", src, partner, fx())?;
        self.across("XX", src, partner, fz())
    }

    /// Moves logical `l` from its home to the other tape and returns the
    /// position it now occupies.
    fn move_out(&mut self, l: usize) -> Result<usize> {
        let home = self.layout.homes[l];
        let t = self.layout.tape(home);
        match self.layout.family {
            ModelFamily::F => {
                let a = self.layout.aux[0][0];
                self.transfer(l, home, a)?;
                Ok(a)
            }
            _ => {
                let (a, b, c) = (self.layout.aux[1 - t][0], self.layout.aux[1 - t][1], self.layout.aux[t][0]);
                self.teleport(l, home, a, b, c)?;
                Ok(a)
            }
        }
    }

    fn move_back(&mut self, l: usize, at: usize) -> Result<()> {
        let home = self.layout.homes[l];
        let t = self.layout.tape(home);
        match self.layout.family {
            ModelFamily::F => self.transfer(l, at, home),
            _ => self.teleport(l, at, home, self.layout.aux[t][0], self.layout.aux[1 - t][1]),
        }
    }

    /// Repeats a round trip of `l` until its frame is I or Z.
    fn make_diagonal(&mut self, l: usize) -> Result<()> {
        let head = self.steps.len();
        self.steps.push(Step::SkipIfDiagonal { logical: l, target: 0 });
        let at = self.move_out(l)?;
        self.move_back(l, at)?;
        self.steps.push(Step::Jump(head));
        let end = self.steps.len();
        self.steps[head] = Step::SkipIfDiagonal { logical: l, target: end };
        Ok(())
    }

    /// The program measurement `name` with logical `li` at `p` and `lj` at `q`.
    fn record(&mut self, name: &str, p: usize, q: usize, li: usize, lj: usize) -> Result<()> {
        let flat = self.layout.family == ModelFamily::A;
        let (name, pos, logicals) = if flat || self.layout.tape(p) == 0 {
            (name.to_string(), vec![p, q], vec![Some(li), Some(lj)])
        } else {
            (swap_name(name), vec![q, p], vec![Some(lj), Some(li)])
        };
        let term = first_term(&name);
        self.push(&name, pos, Effect::Record { logicals, term })
    }

    fn op(&mut self, op: &ProgramOp) -> Result<()> {
        let name = op.observable.as_str();
        let [i, j] = op.qubits;
        let (hi, hj) = (self.layout.homes[i], self.layout.homes[j]);
        if self.layout.family == ModelFamily::A {
            return self.record(name, hi, hj, i, j);
        }
        if name.ends_with('I') {
            let letter = name.chars().next().unwrap();
            let q = self.layout.partner(hi);
            let (obs, pos, logicals) = if self.layout.tape(hi) == 0 {
                (format!("{letter}I"), vec![hi, q], vec![Some(i), None])
            } else {
                (format!("I{letter}"), vec![q, hi], vec![None, Some(i)])
            };
            let term = first_term(&obs);
            return self.push(&obs, pos, Effect::Record { logicals, term });
        }
        let carrier = match name {
            "XX+YX" => Some(i),
            "XX+XY" => Some(j),
            _ => None,
        };
        if let Some(c) = carrier {
            self.make_diagonal(c)?;
        }
        let shared = self.layout.tape(hi) == self.layout.tape(hj);
        if !shared {
            return self.record(name, hi, hj, i, j);
        }
        let s = if carrier == Some(i) { j } else { i };
        let at = self.move_out(s)?;
        if s == i {
            self.record(name, at, hj, i, j)?;
        } else {
            self.record(name, hi, at, i, j)?;
        }
        self.move_back(s, at)
    }
}

impl Reduction {
    pub fn new(family: ModelFamily, prog: &MeasurementProgram, logical: usize) -> Result<Self> {
        if prog.qubit_count() > logical {
            return Err(ModelError::Invalid(format!(
                "program uses {} qubits but only {logical} are available",
                prog.qubit_count()
            )));
        }
        let layout = Layout::new(family, logical)?;
        let mut b = Builder { layout: &layout, steps: Vec::new() };
        for op in &prog.ops {
            b.op(op)?;
        }
        let steps = b.steps;
        Ok(Reduction { layout, steps })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Number of measurements on a run where no correction loop repeats.
    pub fn straight_line_length(&self) -> usize {
        let mut n = 0;
        let mut pc = 0;
        while pc < self.steps.len() {
            match &self.steps[pc] {
                Step::Measure { .. } => {
                    n += 1;
                    pc += 1;
                }
                Step::SkipIfDiagonal { target, .. } => pc = *target,
                Step::Jump(t) => pc = *t,
            }
        }
        n
    }

    /// `input` on the logical positions, auxiliaries in |0>.
    pub fn embed(&self, input: &StateVector) -> Result<StateVector> {
        if input.num_qubits() != self.layout.homes.len() {
            return Err(ModelError::Invalid(format!(
                "input has {} qubits, layout expects {}",
                input.num_qubits(),
                self.layout.homes.len()
            )));
        }
        Ok(input.tensor(&StateVector::zero(self.layout.size() - input.num_qubits())))
    }

    pub fn initial_state(&self) -> ReductionState {
        self.settle(ReductionState { pc: 0, frames: vec![Pauli::I; self.layout.homes.len()], outcomes: Vec::new() })
    }

    fn settle(&self, mut st: ReductionState) -> ReductionState {
        loop {
            match self.steps.get(st.pc) {
                Some(Step::SkipIfDiagonal { logical, target }) => {
                    st.pc = if matches!(st.frames[*logical], Pauli::I | Pauli::Z) { *target } else { st.pc + 1 };
                }
                Some(Step::Jump(t)) => st.pc = *t,
                _ => return st,
            }
        }
    }

    /// Frame over the logical home positions.
    pub fn frame(&self, st: &ReductionState) -> PauliFrame {
        PauliFrame::new(&self.layout.homes, PauliOp::new(st.frames.clone(), 0))
    }

    /// Logical register of a finished branch with its frame undone.
    pub fn logical_state(&self, st: &ReductionState, register: &StateVector) -> Result<StateVector> {
        let undone = self.frame(st).undo(register)?;
        Ok(undone.extract(&self.layout.homes)?)
    }
}

impl Controller for Reduction {
    type State = ReductionState;

    fn action(&self, st: &ReductionState) -> ControlAction {
        match self.steps.get(st.pc) {
            Some(Step::Measure { observable, positions, .. }) => {
                ControlAction::Measure { observable: observable.clone(), positions: positions.clone() }
            }
            _ => ControlAction::Halt,
        }
    }

    fn advance(&self, st: &ReductionState, outcome: f64) -> ReductionState {
        let mut next = st.clone();
        let bit = outcome_bit(outcome);
        if let Some(Step::Measure { effect, .. }) = self.steps.get(st.pc) {
            match effect {
                Effect::Frame { logical, flip } => {
                    if bit == 1 {
                        next.frames[*logical] = next.frames[*logical].class_mul(*flip);
                    }
                }
                Effect::Record { logicals, term } => {
                    let flips = logicals
                        .iter()
                        .zip(term.labels())
                        .filter(|(l, p)| l.is_some_and(|l| !st.frames[l].commutes_with(**p)))
                        .count();
                    next.outcomes.push(bit ^ (flips % 2) as u8);
                }
            }
        }
        next.pc += 1;
        self.settle(next)
    }
}

/// One sampled run of a reduction.
#[derive(Debug, Clone)]
pub struct ReductionRun {
    pub register: StateVector,
    pub control: ReductionState,
    pub records: Vec<MeasurementRecord>,
    /// Frame-corrected outcome bits of the program measurements.
    pub outcomes: Vec<u8>,
    pub frame: PauliFrame,
    pub logical: StateVector,
}

/// Runs `prog` on `input` under the layout of `family`, drawing outcomes
/// from `source`.
pub fn simulate_program_on<S: OutcomeSource + ?Sized>(
    family: ModelFamily,
    prog: &MeasurementProgram,
    input: &StateVector,
    source: &mut S,
    max_measurements: usize,
) -> Result<ReductionRun> {
    let red = Reduction::new(family, prog, input.num_qubits())?;
    let mut register = red.embed(input)?;
    let mut control = red.initial_state();
    let mut records = Vec::new();
    while let ControlAction::Measure { observable, positions } = red.action(&control) {
        if records.len() == max_measurements {
            return Err(ModelError::StepLimit(max_measurements));
        }
        let (rec, post) = measure(&register, &observable, &positions, source)?;
        control = red.advance(&control, rec.outcome);
        register = post;
        records.push(rec);
    }
    let logical = red.logical_state(&control, &register)?;
    Ok(ReductionRun {
        frame: red.frame(&control),
        outcomes: control.outcomes.clone(),
        register,
        control,
        records,
        logical,
    })
}

/// A final logical state with its program outcomes and probability.
#[derive(Debug, Clone)]
pub struct Weighted {
    pub outcomes: Vec<u8>,
    pub state: StateVector,
    pub probability: f64,
}

/// Exact distribution of frame-corrected outcomes and logical states under
/// `family`, plus the probability mass left unresolved by correction loops.
pub fn reduction_distribution(
    family: ModelFamily,
    prog: &MeasurementProgram,
    input: &StateVector,
) -> Result<(Vec<Weighted>, f64)> {
    let red = Reduction::new(family, prog, input.num_qubits())?;
    let limits = ExploreLimits { max_steps: 100_000, min_probability: 1e-16 };
    let ex = explore(&red, red.initial_state(), red.embed(input)?, limits)?;
    let entries = ex
        .halted
        .iter()
        .map(|b| {
            Ok(Weighted {
                outcomes: b.control.outcomes.clone(),
                state: red.logical_state(&b.control, &b.state)?,
                probability: b.probability,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((entries, ex.dropped + ex.frontier_mass()))
}

/// Distribution of `prog` on a flat register, by path enumeration.
pub fn flat_distribution(prog: &MeasurementProgram, input: &StateVector) -> Result<Vec<Weighted>> {
    let paths = enumerate_paths(|script: &mut PathScript| {
        let mut reg = input.clone();
        for op in &prog.ops {
            let obs = shared_observable(&op.observable)?;
            let (_, post) = measure(&reg, &obs, &op.qubits, script)?;
            reg = post;
        }
        Ok::<_, ModelError>(reg)
    })?;
    Ok(paths
        .into_iter()
        .map(|p| Weighted {
            outcomes: p.outcomes.iter().map(|&o| outcome_bit(o)).collect(),
            state: p.value,
            probability: p.probability,
        })
        .collect())
}

/// Total-variation distance between two distributions over (outcomes, state),
/// identifying states equal up to global phase.
pub fn total_variation(a: &[Weighted], b: &[Weighted]) -> f64 {
    // (representative, mass in a, mass in b)
    let mut groups: Vec<(&Weighted, f64, f64)> = Vec::new();
    for (side, list) in [a, b].into_iter().enumerate() {
        for w in list {
            let hit = groups.iter_mut().find(|g| {
                g.0.outcomes == w.outcomes
                    && fidelity_up_to_global_phase(&g.0.state, &w.state).is_ok_and(|f| f > 1.0 - 1e-6)
            });
            let g = match hit {
                Some(g) => g,
                None => {
                    groups.push((w, 0.0, 0.0));
                    groups.last_mut().unwrap()
                }
            };
            if side == 0 {
                g.1 += w.probability;
            } else {
                g.2 += w.probability;
            }
        }
    }
    0.5 * groups.iter().map(|g| (g.1 - g.2).abs()).sum::<f64>()
}
