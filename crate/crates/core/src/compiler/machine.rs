use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rand::Rng;

use super::circuit::{Circuit, Gate};
use super::step::{advance, output_slots, slot_count, start, step_of_simulation, Builder, Control, Instr, Loc};
use super::{Result, PARK_CELL};
use crate::machine::{AncillaPolicy, HeadSpec, MachineSpec, Outcome, RunStatus, Runtime, TapeSpec};
use crate::models::OBSERVABLES_A;
use crate::quantum::{fidelity_up_to_global_phase, Pauli, StateVector};

/// Finite control of one gate's full simulation.
#[derive(Debug, Clone)]
pub struct SimulationAutomaton {
    pub gate: Gate,
    /// State names; index 0 is the entry. Each state performs one measurement.
    pub states: Vec<String>,
    pub measurements: Vec<(&'static str, [Loc; 2])>,
    /// `(from, outcome bit, to)`; `to == None` is the exit.
    pub transitions: Vec<(usize, u8, Option<usize>)>,
    /// Pauli classes carried by each state.
    pub classes: Vec<Vec<Pauli>>,
}

impl SimulationAutomaton {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn entry(&self) -> usize {
        0
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = (u8, Option<usize>)> + '_ {
        self.transitions.iter().filter(move |t| t.0 == s).map(|t| (t.1, t.2))
    }

    /// States from which some outcome sequence reaches the exit.
    pub fn can_exit(&self) -> Vec<bool> {
        let mut ok = vec![false; self.states.len()];
        loop {
            let mut changed = false;
            for &(from, _, to) in &self.transitions {
                if !ok[from] && to.is_none_or(|t| ok[t]) {
                    ok[from] = true;
                    changed = true;
                }
            }
            if !changed {
                return ok;
            }
        }
    }
}

/// Enumerates the reachable control states of a program; returns them in
/// discovery order with their transitions.
fn reachable<L>(instrs: &[Instr<L>], operands: usize) -> (Vec<Control>, Vec<(usize, u8, Option<usize>)>) {
    let first = start(instrs, operands);
    let mut states = Vec::new();
    let mut index = HashMap::new();
    let mut transitions = Vec::new();
    let mut queue = VecDeque::new();
    if first.0 < instrs.len() {
        index.insert(first.clone(), 0);
        states.push(first.clone());
        queue.push_back(first);
    }
    while let Some(c) = queue.pop_front() {
        let from = index[&c];
        for bit in [0u8, 1] {
            let next = advance(instrs, &c, bit);
            let to = if next.0 >= instrs.len() {
                None
            } else {
                Some(*index.entry(next.clone()).or_insert_with(|| {
                    states.push(next.clone());
                    queue.push_back(next.clone());
                    states.len() - 1
                }))
            };
            transitions.push((from, bit, to));
        }
    }
    (states, transitions)
}

impl super::GateStep {
    /// Number of reachable control states of the step on its own.
    pub fn state_count(&self) -> usize {
        reachable(&self.instrs, self.gate.arity()).0.len()
    }
}

fn state_name((pc, classes): &Control) -> String {
    let cls: String = classes.iter().map(|p| p.symbol()).collect();
    format!("p{pc}.{cls}")
}

pub fn full_simulation(gate: Gate) -> SimulationAutomaton {
    let instrs = step_of_simulation(gate).full_program();
    let (states, transitions) = reachable(&instrs, gate.arity());
    let measurements = states
        .iter()
        .map(|(pc, _)| match &instrs[*pc] {
            Instr::Measure { observable, at, .. } => (*observable, *at),
            _ => unreachable!("settled states sit on measurements"),
        })
        .collect();
    SimulationAutomaton {
        gate,
        states: states.iter().map(state_name).collect(),
        measurements,
        classes: states.iter().map(|s| s.1.clone()).collect(),
        transitions,
    }
}

/// Tape layout of a compiled circuit: logical qubit `q` starts on cell `q`
/// and owns two more cells at `n + 2q` and `n + 2q + 1`.
fn cell_of(n: usize, q: usize, slot: usize) -> i64 {
    if slot == 0 {
        q as i64
    } else {
        (n + 2 * q + slot - 1) as i64
    }
}

/// Measurement program of a whole circuit over absolute cells.
fn circuit_program(c: &Circuit) -> Vec<Instr<i64>> {
    let n = c.qubits();
    let mut b = Builder::new(PARK_CELL);
    let mut at = vec![0usize; n];
    for (g, ops) in c.gates() {
        let slots: Vec<i64> = match g {
            Gate::Cnot => {
                let (qc, qt) = (ops[0], ops[1]);
                vec![cell_of(n, qc, at[qc]), cell_of(n, qt, at[qt]), cell_of(n, qc, (at[qc] + 1) % 3)]
            }
            _ => {
                let q = ops[0];
                (0..slot_count(*g)).map(|k| cell_of(n, q, (at[q] + k) % 3)).collect()
            }
        };
        b.full_simulation(*g, ops, &slots);
        if g.arity() == 1 {
            at[ops[0]] = (at[ops[0]] + output_slots(*g)[0]) % 3;
        }
    }
    for q in 0..n {
        if at[q] != 0 {
            let (src, home) = (cell_of(n, q, at[q]), cell_of(n, q, 0));
            b.transfer(q, src, home);
            b.correct(q, home, src);
        }
    }
    if !b.instrs.is_empty() && n > 0 {
        b.instrs.push(Instr::Measure { observable: "ZI", at: [PARK_CELL, 0], flips: Vec::new() });
    }
    b.instrs
}

/// Compiles `c` into a two-head machine over the two-head observable set.
/// Head `h2` is the input and output head and ends on cell 0.
pub fn compile_circuit(c: &Circuit) -> MachineSpec {
    let instrs = circuit_program(c);
    let tape = TapeSpec::infinite("main");
    let heads = vec![HeadSpec::new("h1", "main", PARK_CELL), HeadSpec::new("h2", "main", 0)];
    let mut m = MachineSpec::new("circuit", vec![tape], heads, &OBSERVABLES_A).expect("builtin observables");
    m.input_head = "h2".into();
    m.output_head = "h2".into();

    let (states, transitions) = reachable(&instrs, c.qubits());
    let names: Vec<String> = states.iter().map(state_name).collect();
    let target = |k: usize| match &instrs[states[k].0] {
        Instr::Measure { observable, at, .. } => (*observable, *at),
        _ => unreachable!("settled states sit on measurements"),
    };
    if !states.is_empty() {
        let (obs, at) = target(0);
        m.add_transition("start", Outcome::initial(), &names[0], obs, &[at[0] - PARK_CELL, at[1]]);
    }
    for (from, bit, to) in transitions {
        let Some(to) = to else { continue };
        let (_, here) = target(from);
        let (obs, there) = target(to);
        m.add_transition(
            &names[from],
            Outcome::from_bit(bit),
            &names[to],
            obs,
            &[there[0] - here[0], there[1] - here[1]],
        );
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub trials: usize,
    pub halted: usize,
    /// Halted trials whose output fidelity fell below `1 - 1e-9`.
    pub failures: usize,
    pub min_fidelity: f64,
    pub mean_steps: f64,
    pub state_count: usize,
}

impl VerifyReport {
    pub fn halting_fraction(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.halted as f64 / self.trials as f64
        }
    }

    pub fn passed(&self, min_halting: f64) -> bool {
        self.failures == 0 && self.halting_fraction() >= min_halting
    }
}

pub const FIDELITY_TOLERANCE: f64 = 1e-9;

/// Runs the compiled machine on random product inputs and compares each
/// halted output with the dense circuit unitary.
pub fn verify_compiled<R: Rng>(c: &Circuit, trials: usize, max_steps: usize, rng: &mut R) -> Result<VerifyReport> {
    let machine = Arc::new(compile_circuit(c));
    let u = c.unitary();
    let n = c.qubits();
    let mut report = VerifyReport {
        trials,
        halted: 0,
        failures: 0,
        min_fidelity: 1.0,
        mean_steps: 0.0,
        state_count: machine.state_count(),
    };
    let mut total_steps = 0usize;
    for _ in 0..trials {
        let qubits: Vec<StateVector> = (0..n).map(|_| StateVector::haar_random_qubit(rng)).collect();
        let input = StateVector::product(&qubits);
        let expected = StateVector::from_amplitudes(
            (&u * nalgebra::DVector::from_column_slice(input.amplitudes())).as_slice().to_vec(),
        )?;
        let mut rt = Runtime::new(machine.clone(), input, 0, AncillaPolicy::Zero)?;
        let run = rt.run(rng, max_steps)?;
        total_steps += run.steps;
        if run.status != RunStatus::Halted {
            continue;
        }
        report.halted += 1;
        let out = rt.output_window(n)?;
        let f = fidelity_up_to_global_phase(&out, &expected)?;
        report.min_fidelity = report.min_fidelity.min(f);
        if f < 1.0 - FIDELITY_TOLERANCE {
            report.failures += 1;
        }
    }
    report.mean_steps = if trials == 0 { 0.0 } else { total_steps as f64 / trials as f64 };
    Ok(report)
}
