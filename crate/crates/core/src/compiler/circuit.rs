use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::{CompileError, Result};
use crate::quantum::{Pauli, StateVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    H,
    T,
    Cnot,
    X,
    Y,
    Z,
}

impl Gate {
    pub const ALL: [Gate; 6] = [Gate::H, Gate::T, Gate::Cnot, Gate::X, Gate::Y, Gate::Z];

    pub fn arity(self) -> usize {
        if self == Gate::Cnot {
            2
        } else {
            1
        }
    }

    pub fn pauli(self) -> Option<Pauli> {
        match self {
            Gate::X => Some(Pauli::X),
            Gate::Y => Some(Pauli::Y),
            Gate::Z => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn from_pauli(p: Pauli) -> Option<Gate> {
        match p {
            Pauli::I => None,
            Pauli::X => Some(Gate::X),
            Pauli::Y => Some(Gate::Y),
            Pauli::Z => Some(Gate::Z),
        }
    }

    /// Matrix over the operands, first operand most significant.
    pub fn matrix(self) -> DMatrix<C64> {
        let r = |x: f64| C64::new(x, 0.0);
        let (o, l) = (r(0.0), r(1.0));
        match self {
            Gate::H => DMatrix::from_row_slice(
                2,
                2,
                &[r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)],
            ),
            Gate::T => DMatrix::from_row_slice(2, 2, &[l, o, o, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]),
            Gate::Cnot => DMatrix::from_row_slice(4, 4, &[l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o]),
            g => {
                let m = g.pauli().unwrap().matrix();
                DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Gate::H => "H",
            Gate::T => "T",
            Gate::Cnot => "CNOT",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
        };
        f.write_str(s)
    }
}

impl FromStr for Gate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "H" => Ok(Gate::H),
            "T" => Ok(Gate::T),
            "CNOT" | "CX" => Ok(Gate::Cnot),
            "X" => Ok(Gate::X),
            "Y" => Ok(Gate::Y),
            "Z" => Ok(Gate::Z),
            _ => Err(format!("unknown gate `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<(Gate, Vec<usize>)>,
}

impl Circuit {
    pub fn new(qubits: usize, gates: Vec<(Gate, Vec<usize>)>) -> Result<Self> {
        for (g, ops) in &gates {
            if ops.len() != g.arity() {
                return Err(CompileError::Invalid(format!("{g} takes {} operands, got {}", g.arity(), ops.len())));
            }
            if ops.len() == 2 && ops[0] == ops[1] {
                return Err(CompileError::Invalid(format!("{g} operands must differ")));
            }
            if let Some(&q) = ops.iter().find(|&&q| q >= qubits) {
                return Err(CompileError::Invalid(format!("qubit {q} is out of range for {qubits} qubits")));
            }
        }
        Ok(Circuit { qubits, gates })
    }

    pub fn empty(qubits: usize) -> Self {
        Circuit { qubits, gates: Vec::new() }
    }

    pub fn gate(mut self, g: Gate, ops: &[usize]) -> Result<Self> {
        self.gates.push((g, ops.to_vec()));
        Circuit::new(self.qubits, self.gates)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[(Gate, Vec<usize>)] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Dense unitary of the whole circuit.
    pub fn unitary(&self) -> DMatrix<C64> {
        let dim = 1usize << self.qubits;
        let mut u = DMatrix::identity(dim, dim);
        for (g, ops) in &self.gates {
            u = embed(&g.matrix(), ops, self.qubits) * u;
        }
        u
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let mut s = state.clone();
        for (g, ops) in &self.gates {
            s = s.apply_local(&g.matrix(), ops)?;
        }
        Ok(s)
    }
}

fn embed(m: &DMatrix<C64>, ops: &[usize], n: usize) -> DMatrix<C64> {
    let dim = 1usize << n;
    let k = ops.len();
    let mut out = DMatrix::zeros(dim, dim);
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    for col in 0..dim {
        let local_in = ops.iter().fold(0, |acc, &q| acc << 1 | bit(col, q));
        for local_out in 0..1usize << k {
            let amp = m[(local_out, local_in)];
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let mut row = col;
            for (pos, &q) in ops.iter().enumerate() {
                let b = (local_out >> (k - 1 - pos)) & 1;
                let mask = 1 << (n - 1 - q);
                row = if b == 1 { row | mask } else { row & !mask };
            }
            out[(row, col)] += amp;
        }
    }
    out
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits: {}", self.qubits)?;
        for (g, ops) in &self.gates {
            let ops: Vec<String> = ops.iter().map(|q| q.to_string()).collect();
            writeln!(f, "{g} {}", ops.join(" "))?;
        }
        Ok(())
    }
}

/// One gate per line (`H 0`, `CNOT 0 1`, ...), `#` comments, and an
/// optional `qubits: n` line; otherwise the width is the largest index + 1.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut declared = None;
    let mut gates = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let err = |message: String| CompileError::Parse { line: k + 1, message };
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix("qubits:") {
            declared =
                Some(rest.trim().parse::<usize>().map_err(|_| err(format!("bad qubit count `{}`", rest.trim())))?);
            continue;
        }
        let mut words = body.split_whitespace();
        let g: Gate = words.next().unwrap().parse().map_err(err)?;
        let ops = words
            .map(|w| w.parse::<usize>().map_err(|_| err(format!("bad qubit index `{w}`"))))
            .collect::<Result<Vec<_>>>()?;
        if ops.len() != g.arity() {
            return Err(err(format!("{g} takes {} operands", g.arity())));
        }
        if ops.len() == 2 && ops[0] == ops[1] {
            return Err(err(format!("{g} operands must differ")));
        }
        gates.push((g, ops));
    }
    let width = gates.iter().flat_map(|(_, o)| o.iter()).map(|q| q + 1).max().unwrap_or(0);
    let qubits = declared.unwrap_or(width);
    Circuit::new(qubits, gates).map_err(|e| match e {
        CompileError::Invalid(message) => CompileError::Parse { line: 0, message },
        e => e,
    })
}
