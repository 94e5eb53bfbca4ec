use std::collections::HashMap;
use std::sync::Arc;

use super::circuit::Gate;
use crate::quantum::{outcome_bit, shared_observable, ControlAction, Controller, Observable, Pauli};

/// A tape location inside a gate step: a numbered slot, or the cell the idle
/// head rests on during a one-qubit measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loc {
    Slot(usize),
    Park,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cond {
    Is(Pauli),
    HasX,
}

impl Cond {
    fn holds(self, p: Pauli) -> bool {
        match self {
            Cond::Is(q) => p == q,
            Cond::HasX => p.x_bit(),
        }
    }
}

/// One instruction of a measurement program over locations `L`.
///
/// Operand indices refer to the logical qubits whose Pauli classes the
/// program tracks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr<L> {
    /// Head 1 on `at[0]`, head 2 on `at[1]`. Outcome bit 1 multiplies the
    /// class of every listed operand by its Pauli.
    Measure {
        observable: &'static str,
        at: [L; 2],
        flips: Vec<(usize, Pauli)>,
    },
    Apply {
        operand: usize,
        pauli: Pauli,
    },
    JumpIf {
        operand: usize,
        cond: Cond,
        target: usize,
    },
    Jump(usize),
}

/// Classical part of a running program: program counter and classes.
pub(crate) type Control = (usize, Vec<Pauli>);

/// Runs classical instructions from `pc` until a measurement or the end.
pub(crate) fn settle<L>(instrs: &[Instr<L>], mut pc: usize, classes: &mut [Pauli]) -> usize {
    let mut budget = 4 * instrs.len() + 4;
    while pc < instrs.len() {
        budget -= 1;
        assert!(budget > 0, "classical loop without a measurement at {pc}");
        match &instrs[pc] {
            Instr::Measure { .. } => return pc,
            Instr::Apply { operand, pauli } => {
                classes[*operand] = classes[*operand].class_mul(*pauli);
                pc += 1;
            }
            Instr::JumpIf { operand, cond, target } => {
                pc = if cond.holds(classes[*operand]) { *target } else { pc + 1 };
            }
            Instr::Jump(t) => pc = *t,
        }
    }
    pc
}

/// Applies outcome `bit` of the measurement at `pc` and settles.
pub(crate) fn advance<L>(instrs: &[Instr<L>], (pc, classes): &Control, bit: u8) -> Control {
    let mut classes = classes.clone();
    if let Instr::Measure { flips, .. } = &instrs[*pc] {
        if bit == 1 {
            for &(op, p) in flips {
                classes[op] = classes[op].class_mul(p);
            }
        }
    }
    let next = settle(instrs, pc + 1, &mut classes);
    (next, classes)
}

pub(crate) fn start<L>(instrs: &[Instr<L>], operands: usize) -> Control {
    let mut classes = vec![Pauli::I; operands];
    let pc = settle(instrs, 0, &mut classes);
    (pc, classes)
}

pub(crate) struct Builder<L> {
    pub instrs: Vec<Instr<L>>,
    park: L,
}

impl<L: Copy> Builder<L> {
    pub fn new(park: L) -> Self {
        Builder { instrs: Vec::new(), park }
    }

    fn here(&self) -> usize {
        self.instrs.len()
    }

    fn measure(&mut self, observable: &'static str, at: [L; 2], flips: &[(usize, Pauli)]) {
        self.instrs.push(Instr::Measure { observable, at, flips: flips.to_vec() });
    }

    fn single(&mut self, observable: &'static str, at: L, flips: &[(usize, Pauli)]) {
        let park = self.park;
        self.measure(observable, [at, park], flips);
    }

    /// Leaves `q` in place and multiplies `op`'s class by `X^r` for a uniform bit `r`.
    fn x_randomize(&mut self, op: usize, q: L, anc: L) {
        self.single("ZI", anc, &[(op, Pauli::X)]);
        self.measure("XX", [q, anc], &[]);
        self.single("ZI", anc, &[(op, Pauli::X)]);
    }

    /// Leaves `q` in place and multiplies `op`'s class by `Z^r`.
    fn z_randomize(&mut self, op: usize, q: L, anc: L) {
        self.single("XI", anc, &[(op, Pauli::Z)]);
        self.measure("ZZ", [q, anc], &[]);
        self.single("XI", anc, &[(op, Pauli::Z)]);
    }

    /// Step of simulation of the Pauli gate `p`, in place.
    pub fn pauli_step(&mut self, op: usize, p: Pauli, q: L, anc: L) {
        self.instrs.push(Instr::Apply { operand: op, pauli: p });
        self.randomize(op, p, q, anc);
    }

    /// Physically applies a uniformly random element of `{I, p}` for each
    /// component of `p`. On a frame equal to `p` this is the step of
    /// simulation of `p`: the new frame is `σ' = p·p^r`.
    fn randomize(&mut self, op: usize, p: Pauli, q: L, anc: L) {
        if p.x_bit() {
            self.x_randomize(op, q, anc);
        }
        if p.z_bit() {
            self.z_randomize(op, q, anc);
        }
    }

    /// Repeats the step of simulation of the current class until it is I.
    pub fn correct(&mut self, op: usize, q: L, anc: L) {
        let top = self.here();
        let exit_jump = self.here();
        self.instrs.push(Instr::JumpIf { operand: op, cond: Cond::Is(Pauli::I), target: usize::MAX });
        let mut dispatch = Vec::new();
        for p in [Pauli::X, Pauli::Y] {
            dispatch.push(self.here());
            self.instrs.push(Instr::JumpIf { operand: op, cond: Cond::Is(p), target: usize::MAX });
        }
        let mut bodies = Vec::new();
        for p in [Pauli::Z, Pauli::X, Pauli::Y] {
            bodies.push(self.here());
            self.randomize(op, p, q, anc);
            self.instrs.push(Instr::Jump(top));
        }
        let end = self.here();
        self.patch(exit_jump, end);
        self.patch(dispatch[0], bodies[1]);
        self.patch(dispatch[1], bodies[2]);
    }

    fn patch(&mut self, at: usize, to: usize) {
        if let Instr::JumpIf { target, .. } = &mut self.instrs[at] {
            *target = to;
        }
    }

    /// Moves `op` from `src` to `dst` with frame `X^k Z^j X^i`.
    pub fn transfer(&mut self, op: usize, src: L, dst: L) {
        self.single("ZI", dst, &[(op, Pauli::X)]);
        self.measure("XX", [dst, src], &[(op, Pauli::Z)]);
        self.single("ZI", src, &[(op, Pauli::X)]);
    }

    /// Transfer whose middle measurement is `T XX T†` with `T` on the
    /// source: the source state receives `T†` before it moves. Conjugating
    /// through an X-type class turns that into `T`.
    fn rotated_transfer(&mut self, op: usize, src: L, dst: L) {
        self.single("ZI", dst, &[(op, Pauli::X)]);
        self.measure("XX+YX", [src, dst], &[(op, Pauli::Z)]);
        self.single("ZI", src, &[(op, Pauli::X)]);
    }

    /// The step of simulation of `gate`. `ops` are the logical operands and
    /// `slots` the locations named by [`GateStep`]'s slot numbering.
    pub fn gate_step(&mut self, gate: Gate, ops: &[usize], slots: &[L]) {
        match gate {
            Gate::H => {
                let (q, a1, a2) = (slots[0], slots[1], slots[2]);
                let op = ops[0];
                self.measure("ZZ", [a1, a2], &[(op, Pauli::X)]);
                self.measure("XX", [a1, a2], &[(op, Pauli::Z)]);
                self.measure("XZ", [q, a1], &[(op, Pauli::X)]);
                self.measure("ZX", [q, a1], &[(op, Pauli::Z)]);
            }
            Gate::T => {
                let (q, dst) = (slots[0], slots[1]);
                let op = ops[0];
                let top = self.here();
                let ready = self.here();
                self.instrs.push(Instr::JumpIf { operand: op, cond: Cond::HasX, target: usize::MAX });
                self.x_randomize(op, q, dst);
                self.instrs.push(Instr::Jump(top));
                let rot = self.here();
                self.patch(ready, rot);
                self.rotated_transfer(op, q, dst);
            }
            Gate::Cnot => {
                let (c, t, a) = (slots[0], slots[1], slots[2]);
                let (oc, ot) = (ops[0], ops[1]);
                self.single("XI", a, &[(oc, Pauli::Z)]);
                self.measure("ZZ", [c, a], &[(ot, Pauli::X)]);
                self.measure("XX", [a, t], &[(oc, Pauli::Z)]);
                self.single("ZI", a, &[(ot, Pauli::X)]);
            }
            g => self.pauli_step(ops[0], g.pauli().expect("Pauli gate"), slots[0], slots[1]),
        }
    }

    /// Step of simulation followed by the correction loop on every operand.
    pub fn full_simulation(&mut self, gate: Gate, ops: &[usize], slots: &[L]) {
        self.gate_step(gate, ops, slots);
        let anc = slots[correction_slot(gate)];
        for (k, &op) in ops.iter().enumerate() {
            self.correct(op, slots[output_slots(gate)[k]], anc);
        }
    }
}

/// Number of slots a gate step uses: its operands, then ancillas.
pub(crate) fn slot_count(gate: Gate) -> usize {
    match gate {
        Gate::H | Gate::Cnot => 3,
        _ => 2,
    }
}

/// Slot holding each operand once the step is done.
pub(crate) fn output_slots(gate: Gate) -> &'static [usize] {
    match gate {
        Gate::H => &[2],
        Gate::T => &[1],
        Gate::Cnot => &[0, 1],
        _ => &[0],
    }
}

/// Free slot used as the ancilla of the correction loop.
fn correction_slot(gate: Gate) -> usize {
    match gate {
        Gate::H | Gate::T => 0,
        Gate::Cnot => 2,
        _ => 1,
    }
}

/// A gate's step of simulation as a measurement program over abstract
/// slots. Slots `0..arity` hold the operands on entry; the rest start as
/// fresh ancillas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateStep {
    pub gate: Gate,
    pub slots: usize,
    pub instrs: Vec<Instr<Loc>>,
    /// Slot of each operand on exit.
    pub outputs: Vec<usize>,
}

pub fn step_of_simulation(gate: Gate) -> GateStep {
    let slots: Vec<Loc> = (0..slot_count(gate)).map(Loc::Slot).collect();
    let ops: Vec<usize> = (0..gate.arity()).collect();
    let mut b = Builder::new(Loc::Park);
    b.gate_step(gate, &ops, &slots);
    GateStep { gate, slots: slots.len(), instrs: b.instrs, outputs: output_slots(gate).to_vec() }
}

impl GateStep {
    pub fn ancillas(&self) -> usize {
        self.slots - self.gate.arity()
    }

    /// Observables in program order (loop bodies once).
    pub fn observables(&self) -> Vec<&'static str> {
        self.instrs
            .iter()
            .filter_map(|i| match i {
                Instr::Measure { observable, .. } => Some(*observable),
                _ => None,
            })
            .collect()
    }

    /// Pauli class of each operand after the outcome bits `bits`, or `None`
    /// if `bits` does not end exactly when the step does.
    pub fn classify(&self, bits: &[u8]) -> Option<Vec<Pauli>> {
        let mut control = start(&self.instrs, self.gate.arity());
        for &b in bits {
            if control.0 >= self.instrs.len() {
                return None;
            }
            control = advance(&self.instrs, &control, b);
        }
        (control.0 >= self.instrs.len()).then_some(control.1)
    }

    /// Controller running this step on a register where slot `k` sits at
    /// `positions[k]` and the parking cell at `park`.
    pub fn controller(&self, positions: &[usize], park: usize) -> ProgramController {
        let at = |l: Loc| match l {
            Loc::Slot(k) => positions[k],
            Loc::Park => park,
        };
        ProgramController::new(map_locs(&self.instrs, at), self.gate.arity())
    }

    /// The full simulation program of this gate over the same slots.
    pub fn full_program(&self) -> Vec<Instr<Loc>> {
        let slots: Vec<Loc> = (0..self.slots).map(Loc::Slot).collect();
        let ops: Vec<usize> = (0..self.gate.arity()).collect();
        let mut b = Builder::new(Loc::Park);
        b.full_simulation(self.gate, &ops, &slots);
        b.instrs
    }
}

pub(crate) fn map_locs<L: Copy, M>(instrs: &[Instr<L>], f: impl Fn(L) -> M) -> Vec<Instr<M>> {
    instrs
        .iter()
        .map(|i| match i {
            Instr::Measure { observable, at, flips } => {
                Instr::Measure { observable, at: [f(at[0]), f(at[1])], flips: flips.clone() }
            }
            Instr::Apply { operand, pauli } => Instr::Apply { operand: *operand, pauli: *pauli },
            Instr::JumpIf { operand, cond, target } => {
                Instr::JumpIf { operand: *operand, cond: *cond, target: *target }
            }
            Instr::Jump(t) => Instr::Jump(*t),
        })
        .collect()
}

/// Drives a measurement program over register positions.
#[derive(Debug, Clone)]
pub struct ProgramController {
    instrs: Vec<Instr<usize>>,
    operands: usize,
    observables: HashMap<&'static str, Arc<Observable>>,
}

impl ProgramController {
    pub fn new(instrs: Vec<Instr<usize>>, operands: usize) -> Self {
        let observables = instrs
            .iter()
            .filter_map(|i| match i {
                Instr::Measure { observable, .. } => {
                    Some((*observable, shared_observable(observable).expect("builtin observable")))
                }
                _ => None,
            })
            .collect();
        ProgramController { instrs, operands, observables }
    }

    pub fn initial(&self) -> (usize, Vec<Pauli>) {
        start(&self.instrs, self.operands)
    }

    pub fn is_done(&self, state: &(usize, Vec<Pauli>)) -> bool {
        state.0 >= self.instrs.len()
    }
}

impl Controller for ProgramController {
    type State = (usize, Vec<Pauli>);

    fn action(&self, state: &Self::State) -> ControlAction {
        match self.instrs.get(state.0) {
            Some(Instr::Measure { observable, at, .. }) => {
                ControlAction::Measure { observable: self.observables[observable].clone(), positions: at.to_vec() }
            }
            _ => ControlAction::Halt,
        }
    }

    fn advance(&self, state: &Self::State, outcome: f64) -> Self::State {
        advance(&self.instrs, state, outcome_bit(outcome))
    }
}
