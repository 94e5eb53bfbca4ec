//! Line-oriented text format for machines.
//!
//! ```text
//! # comment
//! name: write0
//! tapes:
//!   main infinite
//! heads:
//!   h main 0
//! observables: X Z
//! moves: -1..1
//! initial: start init
//! input-head: h
//! output-head: h
//! delta:
//!   start init -> z X 0
//!   z +1 -> x Z 0
//! ```
//!
//! `name:`, `states:` and `moves:` are optional; states are otherwise taken
//! from `initial:` and the `delta:` rows, and moves default to unbounded.
//! Missing `(state, outcome)` rows mean halt.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{HeadSpec, MachineSpec, MoveRange, MoveSet, Outcome, TapeLength, TapeSpec, Transition};
use crate::quantum::shared_observable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, message: message.into() })
}

const SECTIONS: [&str; 10] =
    ["name", "states", "tapes", "heads", "observables", "moves", "initial", "input-head", "output-head", "delta"];

fn parse_int(line: usize, text: &str) -> Result<i64, ParseError> {
    text.parse().or_else(|_| err(line, format!("expected an integer, found `{text}`")))
}

fn parse_range(line: usize, text: &str) -> Result<MoveRange, ParseError> {
    if text == "any" {
        return Ok(MoveRange::Any);
    }
    match text.split_once("..") {
        Some((lo, hi)) => Ok(MoveRange::Bounded(parse_int(line, lo)?, parse_int(line, hi)?)),
        None => {
            let d = parse_int(line, text)?;
            Ok(MoveRange::Bounded(d, d))
        }
    }
}

pub fn parse_machine(text: &str) -> Result<MachineSpec, ParseError> {
    let mut name = String::from("machine");
    let mut declared_states = BTreeSet::new();
    let mut tapes = Vec::new();
    let mut heads = Vec::new();
    let mut observables = BTreeMap::new();
    let mut moves: Option<MoveSet> = None;
    let mut initial: Option<(String, Outcome)> = None;
    let mut input_head = None;
    let mut output_head = None;
    let mut delta = BTreeMap::new();
    let mut section = "";

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut rest = content;
        if let Some((head, tail)) = content.split_once(':') {
            if SECTIONS.contains(&head.trim()) && !head.contains(char::is_whitespace) {
                section = SECTIONS.iter().find(|s| **s == head.trim()).unwrap();
                rest = tail.trim();
                if rest.is_empty() {
                    continue;
                }
            }
        }
        let words: Vec<&str> = rest.split_whitespace().collect();
        match section {
            "" => return err(line, "content before any section header"),
            "name" => name = rest.to_string(),
            "states" => declared_states.extend(words.iter().map(|s| s.to_string())),
            "tapes" => {
                let [id, len] = words[..] else { return err(line, "expected `<tape> <length|infinite>`") };
                let length = if len == "infinite" {
                    TapeLength::Infinite
                } else {
                    let n = parse_int(line, len)?;
                    if n < 1 {
                        return err(line, "finite tapes need at least one cell");
                    }
                    TapeLength::Finite(n as usize)
                };
                tapes.push(TapeSpec { id: id.to_string(), length });
            }
            "heads" => {
                let [id, tape, cell] = words[..] else { return err(line, "expected `<head> <tape> <cell>`") };
                heads.push(HeadSpec::new(id, tape, parse_int(line, cell)?));
            }
            "observables" => {
                for w in words {
                    let obs = shared_observable(w).or_else(|e| err(line, e.to_string()))?;
                    observables.insert(w.to_string(), obs);
                }
            }
            "moves" => {
                let ranges = words.iter().map(|w| parse_range(line, w)).collect::<Result<_, _>>()?;
                moves = Some(MoveSet(ranges));
            }
            "initial" => {
                let [s, v] = words[..] else { return err(line, "expected `initial: <state> <outcome>`") };
                initial = Some((s.to_string(), Outcome::parse(v)));
            }
            "input-head" => input_head = Some(rest.to_string()),
            "output-head" => output_head = Some(rest.to_string()),
            "delta" => {
                let [s, v, "->", next, obs, d] = words[..] else {
                    return err(line, "expected `<state> <outcome> -> <state> <observable> <d1>[,<d2>...]`");
                };
                let moves = d.split(',').map(|x| parse_int(line, x)).collect::<Result<Vec<_>, _>>()?;
                let key = (s.to_string(), Outcome::parse(v));
                if delta.contains_key(&key) {
                    return err(line, format!("duplicate transition for ({s}, {v})"));
                }
                delta.insert(key, Transition { next: next.to_string(), observable: obs.to_string(), moves });
            }
            _ => unreachable!(),
        }
    }

    let last = text.lines().count();
    let Some((initial_state, initial_outcome)) = initial else { return err(last, "missing `initial:`") };
    let input_head = input_head.or_else(|| heads.first().map(|h: &HeadSpec| h.id.clone()));
    let output_head = output_head.or_else(|| input_head.clone());
    let (Some(input_head), Some(output_head)) = (input_head, output_head) else {
        return err(last, "no heads declared");
    };
    let mut states = declared_states;
    states.insert(initial_state.clone());
    for ((s, _), t) in &delta {
        states.insert(s.clone());
        states.insert(t.next.clone());
    }
    Ok(MachineSpec {
        name,
        states,
        observables,
        moves: moves.unwrap_or_else(|| MoveSet::unbounded(heads.len())),
        delta,
        tapes,
        heads,
        initial_state,
        initial_outcome,
        input_head,
        output_head,
    })
}

/// Renders `m` so that [`parse_machine`] reproduces it.
pub fn write_machine(m: &MachineSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name: {}", m.name);
    let states: Vec<&str> = m.states.iter().map(String::as_str).collect();
    let _ = writeln!(out, "states: {}", states.join(" "));
    let _ = writeln!(out, "tapes:");
    for t in &m.tapes {
        match t.length {
            TapeLength::Infinite => writeln!(out, "  {} infinite", t.id),
            TapeLength::Finite(n) => writeln!(out, "  {} {}", t.id, n),
        }
        .unwrap();
    }
    let _ = writeln!(out, "heads:");
    for h in &m.heads {
        let _ = writeln!(out, "  {} {} {}", h.id, h.tape, h.initial_cell);
    }
    let names: Vec<&str> = m.observables.keys().map(String::as_str).collect();
    let _ = writeln!(out, "observables: {}", names.join(" "));
    let ranges: Vec<String> = m.moves.0.iter().map(|r| r.to_string()).collect();
    let _ = writeln!(out, "moves: {}", ranges.join(" "));
    let _ = writeln!(out, "initial: {} {}", m.initial_state, m.initial_outcome);
    let _ = writeln!(out, "input-head: {}", m.input_head);
    let _ = writeln!(out, "output-head: {}", m.output_head);
    let _ = writeln!(out, "delta:");
    for ((s, v), t) in &m.delta {
        let d: Vec<String> = t.moves.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "  {} {} -> {} {} {}", s, v, t.next, t.observable, d.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const WRITE0: &str = "\
# write 0 on the cell under the head
name: write0
tapes:
  main infinite
heads:
  h main 0
observables: X Z
moves: -1..1
initial: start init
input-head: h
output-head: h
delta:
  start init -> z X 0
  z +1 -> x Z 0
  z -1 -> x Z 0
  x -1 -> z X 0
";

    #[test]
    fn parses_and_round_trips() {
        let m = parse_machine(WRITE0).unwrap();
        assert!(m.validate().is_ok());
        assert_eq!(m.delta.len(), 4);
        assert_eq!(m.states.len(), 3);
        assert_eq!(m.moves, MoveSet(vec![MoveRange::Bounded(-1, 1)]));
        let again = parse_machine(&write_machine(&m)).unwrap();
        assert_eq!(write_machine(&again), write_machine(&m));
        assert_eq!(again.delta, m.delta);
    }

    #[test]
    fn empty_delta_section() {
        let text = "tapes:\n t infinite\nheads:\n h t 0\nobservables: Z\ninitial: s init\ndelta:\n";
        let m = parse_machine(text).unwrap();
        assert!(m.delta.is_empty());
        assert_eq!(m.input_head, "h");
        assert!(m.validate().is_ok());
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_machine("tapes:\n t infinite\nheads:\n h t zero\n").unwrap_err();
        assert_eq!(e.line, 4);
        let e = parse_machine("observables: Q\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_machine("delta:\n a b c\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_machine("stray\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(parse_machine("tapes:\n t infinite\n").is_err());
    }
}
