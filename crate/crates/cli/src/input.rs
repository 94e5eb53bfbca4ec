//! Register inputs given on the command line.
//!
//! Either a basis string over `0 1 + -` (one qubit per character, qubit 0
//! first) or a comma-separated list of `2^n` amplitudes, each `re` or
//! `re:im`. Amplitude lists are normalized.

use mqtm_core::{StateVector, C64};

pub fn parse_input(text: &str) -> Result<StateVector, String> {
    let text = text.trim();
    if text.contains(',') || text.contains(':') || text.contains('.') {
        return parse_amplitudes(text);
    }
    let mut qubits = Vec::with_capacity(text.len());
    for ch in text.chars() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match ch {
            '0' => (1.0, 0.0),
            '1' => (0.0, 1.0),
            '+' => (s, s),
            '-' => (s, -s),
            _ => return Err(format!("`{ch}` is not one of 0 1 + -")),
        };
        qubits.push(StateVector::qubit(C64::new(a, 0.0), C64::new(b, 0.0)).map_err(|e| e.to_string())?);
    }
    Ok(StateVector::product(&qubits))
}

fn parse_amplitudes(text: &str) -> Result<StateVector, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad amplitude component `{s}`"));
    let amps = text
        .split(',')
        .map(|term| match term.split_once(':') {
            Some((re, im)) => Ok(C64::new(num(re)?, num(im)?)),
            None => Ok(C64::new(num(term)?, 0.0)),
        })
        .collect::<Result<Vec<_>, String>>()?;
    if !amps.len().is_power_of_two() {
        return Err(format!("{} amplitudes is not a power of two", amps.len()));
    }
    StateVector::normalized(amps).map_err(|e| e.to_string())
}

/// `|bits>` when `state` is a basis state up to phase, else the full expansion.
pub fn render_state(state: &StateVector) -> String {
    let amps = state.amplitudes();
    let n = state.num_qubits();
    if let Some(i) = amps.iter().position(|a| a.norm_sqr() > 1.0 - 1e-9) {
        let bits: String = (0..n).map(|q| if i >> (n - 1 - q) & 1 == 1 { '1' } else { '0' }).collect();
        return format!("|{bits}>");
    }
    state.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_strings() {
        let s = parse_input("01").unwrap();
        assert_eq!(s.num_qubits(), 2);
        assert!((s.amplitudes()[1].re - 1.0).abs() < 1e-12);
        assert_eq!(render_state(&s), "|01>");
        let p = parse_input("+").unwrap();
        assert!((p.amplitudes()[0].re - p.amplitudes()[1].re).abs() < 1e-12);
        assert_eq!(parse_input("").unwrap().num_qubits(), 0);
        assert!(parse_input("2").is_err());
    }

    #[test]
    fn amplitude_lists() {
        let s = parse_input("1,0:1").unwrap();
        assert!((s.amplitudes()[1].im - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(parse_input("1,0,0").is_err());
        assert!(parse_input("0,0").is_err());
        assert!(parse_input("1,x").is_err());
    }
}
