use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{make_model, ModelError, ModelFamily, Result};
use crate::machine::{Cell, MachineSpec, Outcome, Runtime};

/// Deterministic Turing machine over the bit alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalTM {
    pub states: BTreeSet<String>,
    pub initial: String,
    pub halting: BTreeSet<String>,
    /// `(state, read) -> (next, written, move)`.
    pub rules: BTreeMap<(String, u8), (String, u8, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalRun {
    pub state: String,
    pub head: i64,
    pub steps: usize,
    pub halted: bool,
    /// Cells that were ever written or given as input; all others hold 0.
    pub tape: BTreeMap<i64, u8>,
}

impl ClassicalRun {
    pub fn cells(&self, from: i64, len: usize) -> Vec<u8> {
        (from..from + len as i64).map(|c| self.tape.get(&c).copied().unwrap_or(0)).collect()
    }
}

impl ClassicalTM {
    pub fn new(initial: &str, halting: &[&str]) -> Self {
        let mut states = BTreeSet::from([initial.to_string()]);
        states.extend(halting.iter().map(|s| s.to_string()));
        ClassicalTM {
            states,
            initial: initial.into(),
            halting: halting.iter().map(|s| s.to_string()).collect(),
            rules: BTreeMap::new(),
        }
    }

    pub fn rule(mut self, state: &str, read: u8, next: &str, write: u8, mv: i64) -> Self {
        self.states.insert(state.into());
        self.states.insert(next.into());
        self.rules.insert((state.into(), read), (next.into(), write, mv));
        self
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::Invalid(m));
        if !self.states.contains(&self.initial) {
            return bad(format!("initial state `{}` is not declared", self.initial));
        }
        for h in &self.halting {
            if !self.states.contains(h) {
                return bad(format!("halting state `{h}` is not declared"));
            }
        }
        for ((s, b), (n, w, d)) in &self.rules {
            if !self.states.contains(s) || !self.states.contains(n) {
                return bad(format!("rule `{s} {b}` uses an undeclared state"));
            }
            if self.halting.contains(s) {
                return bad(format!("halting state `{s}` has an outgoing rule"));
            }
            if *b > 1 || *w > 1 || d.abs() > 1 {
                return bad(format!("rule `{s} {b}` leaves the bit alphabet or moves more than one cell"));
            }
        }
        Ok(())
    }

    /// Runs the machine directly on bits, head starting on cell 0 where `input` begins.
    pub fn run(&self, input: &[u8], max_steps: usize) -> ClassicalRun {
        let mut run = ClassicalRun {
            state: self.initial.clone(),
            head: 0,
            steps: 0,
            halted: false,
            tape: input.iter().enumerate().map(|(k, &b)| (k as i64, b)).collect(),
        };
        while run.steps < max_steps {
            let read = run.tape.get(&run.head).copied().unwrap_or(0);
            let rule =
                if self.halting.contains(&run.state) { None } else { self.rules.get(&(run.state.clone(), read)) };
            let Some((next, write, mv)) = rule else {
                run.halted = true;
                return run;
            };
            run.tape.insert(run.head, *write);
            run.head += mv;
            run.state = next.clone();
            run.steps += 1;
        }
        run.halted = self.halting.contains(&run.state)
            || !self.rules.contains_key(&(run.state.clone(), run.tape.get(&run.head).copied().unwrap_or(0)));
        run
    }
}

impl fmt::Display for ClassicalTM {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let states: Vec<&str> = self.states.iter().map(String::as_str).collect();
        let halting: Vec<&str> = self.halting.iter().map(String::as_str).collect();
        writeln!(f, "states: {}", states.join(" "))?;
        writeln!(f, "initial: {}", self.initial)?;
        writeln!(f, "halt: {}", halting.join(" "))?;
        for ((s, b), (n, w, d)) in &self.rules {
            writeln!(f, "{s} {b} -> {n} {w} {d}")?;
        }
        Ok(())
    }
}

/// Parses `states:`, `initial:`, `halt:` lines and rules `s b -> s' b' d`.
pub fn parse_classical_tm(text: &str) -> Result<ClassicalTM> {
    let err = |line: usize, message: String| ModelError::Parse { line, message };
    let mut states = BTreeSet::new();
    let mut initial = None;
    let mut halting = BTreeSet::new();
    let mut rules = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        if let Some((key, rest)) = body.split_once(':') {
            let words = rest.split_whitespace().map(String::from);
            match key.trim() {
                "states" => states.extend(words),
                "initial" => initial = Some(rest.trim().to_string()),
                "halt" => halting.extend(words),
                other => return Err(err(line, format!("unknown section `{other}`"))),
            }
            continue;
        }
        let w: Vec<&str> = body.split_whitespace().collect();
        if w.len() != 6 || w[2] != "->" {
            return Err(err(line, "expected `state bit -> state bit move`".into()));
        }
        let bit = |s: &str| match s {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            _ => Err(err(line, format!("`{s}` is not a bit"))),
        };
        let mv: i64 = w[5].trim_start_matches('+').parse().map_err(|_| err(line, format!("bad move `{}`", w[5])))?;
        let key = (w[0].to_string(), bit(w[1])?);
        if rules.insert(key, (w[3].to_string(), bit(w[4])?, mv)).is_some() {
            return Err(err(line, format!("duplicate rule for `{} {}`", w[0], w[1])));
        }
        states.insert(w[0].to_string());
        states.insert(w[3].to_string());
    }
    let initial = initial.ok_or_else(|| err(0, "missing `initial:`".into()))?;
    let tm = ClassicalTM { states, initial, halting, rules };
    tm.check()?;
    Ok(tm)
}

/// Builds the one-head `{X, Z}` machine that runs `tm` on basis-state tapes.
///
/// Reading is a Z-measurement. Writing `w` is X then Z, repeated until the Z
/// outcome encodes `w`; at least one round is always made. After a write the
/// head moves and the next cell is read in the same transition.
pub fn compile_classical_tm(tm: &ClassicalTM) -> Result<MachineSpec> {
    tm.check()?;
    let mut m = make_model(ModelFamily::C).machine("classical", &["X", "Z"])?;
    let read = |q: &str| format!("read:{q}");
    m.add_transition("start", Outcome::initial(), &read(&tm.initial), "Z", &[0]);
    for q in &tm.states {
        m.states.insert(read(q));
    }
    for ((q, b), (next, w, d)) in &tm.rules {
        let x = format!("x:{q}:{b}");
        let z = format!("z:{q}:{b}");
        m.add_transition(&read(q), Outcome::from_bit(*b), &x, "X", &[0]);
        m.add_transition(&x, Outcome::plus(), &z, "Z", &[0]);
        m.add_transition(&x, Outcome::minus(), &z, "Z", &[0]);
        m.add_transition(&z, Outcome::from_bit(*w), &read(next), "Z", &[*d]);
        m.add_transition(&z, Outcome::from_bit(1 - w), &x, "X", &[0]);
    }
    Ok(m)
}

/// Bits held by `len` cells of `tape` starting at `from`, or `None` if some
/// cell is not in a computational basis state. Unmaterialized cells read 0.
pub fn read_classical_cells(rt: &Runtime, tape: usize, from: i64, len: usize) -> Option<Vec<u8>> {
    (from..from + len as i64)
        .map(|index| match rt.cell_index(Cell { tape, index }) {
            None => Some(0),
            Some(q) => {
                let rho = rt.register().reduced_density(&[q]).ok()?;
                let p1 = rho[(1, 1)].re;
                if p1 > 1.0 - 1e-9 {
                    Some(1)
                } else if p1 < 1e-9 {
                    Some(0)
                } else {
                    None
                }
            }
        })
        .collect()
}
