use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{MachineError, MachineSpec, Outcome};
use crate::quantum::{measure, MeasurementRecord, Observable, OutcomeSource, StateVector};

/// How qubits that have not been touched yet are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncillaPolicy {
    Zero,
    /// Independent Haar-random pure states drawn from a generator with this seed.
    HaarRandom(u64),
}

/// A tape cell: tape index into [`MachineSpec::tapes`] and signed position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub tape: usize,
    pub index: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: String,
    pub last_outcome: Outcome,
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.state, self.last_outcome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub pre: Configuration,
    pub moves: Vec<i64>,
    pub cells: Vec<Cell>,
    pub measurement: MeasurementRecord,
    pub post: Configuration,
}

impl StepRecord {
    /// One-line rendering with tape names resolved against `machine`.
    pub fn describe(&self, machine: &MachineSpec) -> String {
        let cells: Vec<String> =
            self.cells.iter().map(|c| format!("{}[{}]", machine.tapes[c.tape].id, c.index)).collect();
        let moves: Vec<String> = self.moves.iter().map(|d| d.to_string()).collect();
        format!(
            "{} -> {} {} move {} at {} p={:.6}",
            self.pre,
            self.post,
            self.measurement.observable_name,
            moves.join(","),
            cells.join(","),
            self.measurement.probability
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Halted,
    Measured(StepRecord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Halted,
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunResult {
    pub status: RunStatus,
    pub steps: usize,
}

/// A measurement that is ready to be performed: heads already moved, cells materialized.
#[derive(Debug, Clone)]
pub struct PendingMeasurement {
    pub observable: Arc<Observable>,
    pub positions: Vec<usize>,
    next: String,
    moves: Vec<i64>,
    cells: Vec<Cell>,
}

/// Execution state of one machine run.
#[derive(Debug, Clone)]
pub struct Runtime {
    machine: Arc<MachineSpec>,
    config: Configuration,
    heads: Vec<i64>,
    head_tapes: Vec<usize>,
    register: StateVector,
    cells: HashMap<Cell, usize>,
    trace: Vec<StepRecord>,
    haar: Option<ChaCha8Rng>,
    halted: bool,
}

impl Runtime {
    /// Places `input` on the input head's tape starting at `input_offset` and
    /// points the input head at its first qubit.
    pub fn new(
        machine: impl Into<Arc<MachineSpec>>,
        input: StateVector,
        input_offset: i64,
        policy: AncillaPolicy,
    ) -> Result<Self, MachineError> {
        let machine = machine.into();
        let report = machine.validate();
        if !report.is_ok() {
            return Err(MachineError::Invalid(report));
        }
        let input_head = machine.head_index(&machine.input_head).expect("validated");
        let head_tapes: Vec<usize> =
            machine.heads.iter().map(|h| machine.tape_index(&h.tape).expect("validated")).collect();
        let input_tape = head_tapes[input_head];

        let n = input.num_qubits() as i64;
        let tape = &machine.tapes[input_tape];
        if n > 0 && (!tape.contains(input_offset) || !tape.contains(input_offset + n - 1)) {
            return Err(MachineError::Capacity { tape: tape.id.clone(), qubits: n as usize, offset: input_offset });
        }
        if n == 0 && !tape.contains(input_offset) {
            return Err(MachineError::OutOfBounds { head: machine.input_head.clone(), cell: input_offset });
        }

        let cells = (0..n).map(|q| (Cell { tape: input_tape, index: input_offset + q }, q as usize)).collect();
        let mut heads: Vec<i64> = machine.heads.iter().map(|h| h.initial_cell).collect();
        heads[input_head] = input_offset;
        let haar = match policy {
            AncillaPolicy::Zero => None,
            AncillaPolicy::HaarRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        Ok(Runtime {
            config: Configuration {
                state: machine.initial_state.clone(),
                last_outcome: machine.initial_outcome.clone(),
            },
            machine,
            heads,
            head_tapes,
            register: input,
            cells,
            trace: Vec::new(),
            haar,
            halted: false,
        })
    }

    pub fn machine(&self) -> &MachineSpec {
        &self.machine
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn head_positions(&self) -> &[i64] {
        &self.heads
    }

    pub fn register(&self) -> &StateVector {
        &self.register
    }

    pub fn trace(&self) -> &[StepRecord] {
        &self.trace
    }

    pub fn steps(&self) -> usize {
        self.trace.len()
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    /// Register index of a cell, if it has been materialized.
    pub fn cell_index(&self, cell: Cell) -> Option<usize> {
        self.cells.get(&cell).copied()
    }

    /// Cell under the given head.
    pub fn head_cell(&self, head: usize) -> Cell {
        Cell { tape: self.head_tapes[head], index: self.heads[head] }
    }

    /// Register index of `cell`, adding a fresh qubit under the ancilla policy if needed.
    pub fn materialize(&mut self, cell: Cell) -> usize {
        if let Some(&q) = self.cells.get(&cell) {
            return q;
        }
        let fresh = match &mut self.haar {
            None => StateVector::zero(1),
            Some(rng) => StateVector::haar_random_qubit(rng),
        };
        self.register = self.register.tensor(&fresh);
        let q = self.register.num_qubits() - 1;
        self.cells.insert(cell, q);
        q
    }

    /// Whether `delta` is defined at the current configuration.
    pub fn can_step(&self) -> bool {
        !self.halted && self.machine.transition(&self.config.state, &self.config.last_outcome).is_some()
    }

    /// Moves the heads for the next transition and materializes the cells under
    /// them; returns `None` (and marks the run halted) when `delta` is undefined.
    pub fn prepare(&mut self) -> Result<Option<PendingMeasurement>, MachineError> {
        if self.halted {
            return Err(MachineError::AlreadyHalted);
        }
        let machine = self.machine.clone();
        let Some(t) = machine.transition(&self.config.state, &self.config.last_outcome) else {
            self.halted = true;
            return Ok(None);
        };

        let mut targets = Vec::with_capacity(self.heads.len());
        for (h, (&pos, &d)) in self.heads.iter().zip(&t.moves).enumerate() {
            let cell = Cell { tape: self.head_tapes[h], index: pos + d };
            if !machine.tapes[cell.tape].contains(cell.index) {
                return Err(MachineError::OutOfBounds { head: machine.heads[h].id.clone(), cell: cell.index });
            }
            if let Some(g) = targets.iter().position(|c| *c == cell) {
                return Err(MachineError::HeadCoincidence {
                    first: machine.heads[g].id.clone(),
                    second: machine.heads[h].id.clone(),
                    tape: machine.tapes[cell.tape].id.clone(),
                    cell: cell.index,
                });
            }
            targets.push(cell);
        }
        for (h, cell) in targets.iter().enumerate() {
            self.heads[h] = cell.index;
        }
        let positions = targets.iter().map(|&c| self.materialize(c)).collect();
        Ok(Some(PendingMeasurement {
            observable: machine.observables[&t.observable].clone(),
            positions,
            next: t.next.clone(),
            moves: t.moves.clone(),
            cells: targets,
        }))
    }

    /// Records the result of a prepared measurement.
    pub fn commit(
        &mut self,
        pending: PendingMeasurement,
        measurement: MeasurementRecord,
        post: StateVector,
    ) -> StepRecord {
        let pre = self.config.clone();
        self.config = Configuration { state: pending.next, last_outcome: Outcome::value(measurement.outcome) };
        self.register = post;
        let record =
            StepRecord { pre, moves: pending.moves, cells: pending.cells, measurement, post: self.config.clone() };
        self.trace.push(record.clone());
        record
    }

    /// Applies one transition.
    pub fn step<S: OutcomeSource + ?Sized>(&mut self, source: &mut S) -> Result<Step, MachineError> {
        let Some(pending) = self.prepare()? else {
            return Ok(Step::Halted);
        };
        let (record, post) = measure(&self.register, &pending.observable, &pending.positions, source)?;
        Ok(Step::Measured(self.commit(pending, record, post)))
    }

    /// Steps until the machine halts or `max_steps` transitions have been applied in total.
    pub fn run<S: OutcomeSource + ?Sized>(
        &mut self,
        source: &mut S,
        max_steps: usize,
    ) -> Result<RunResult, MachineError> {
        loop {
            if !self.can_step() {
                self.halted = true;
                return Ok(RunResult { status: RunStatus::Halted, steps: self.steps() });
            }
            if self.steps() >= max_steps {
                return Ok(RunResult { status: RunStatus::StepLimit, steps: self.steps() });
            }
            self.step(source)?;
        }
    }

    /// Reduced state of `width` consecutive cells starting under `head`.
    pub fn window(&self, head: usize, width: usize) -> Result<StateVector, MachineError> {
        let start = self.head_cell(head);
        let tape = &self.machine.tapes[start.tape];
        let mut positions = Vec::with_capacity(width);
        for k in 0..width as i64 {
            let cell = Cell { tape: start.tape, index: start.index + k };
            let q = self
                .cells
                .get(&cell)
                .ok_or_else(|| MachineError::Unmaterialized { tape: tape.id.clone(), cell: cell.index })?;
            positions.push(*q);
        }
        Ok(self.register.extract(&positions)?)
    }

    /// Output of a halted run: `width` cells starting at the output head.
    pub fn output_window(&self, width: usize) -> Result<StateVector, MachineError> {
        if !self.halted {
            return Err(MachineError::NotHalted);
        }
        let head = self.machine.head_index(&self.machine.output_head).expect("validated");
        self.window(head, width)
    }
}
