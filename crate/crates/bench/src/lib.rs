//! Seeded inputs shared by the benchmarks.

use mqtm_core::models::{MeasurementProgram, OBSERVABLES_A};
use mqtm_core::{Circuit, Gate, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A `len`-op program over `n` logical qubits drawn from the model A observables.
pub fn random_program(n: usize, len: usize, seed: u64) -> MeasurementProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = (0..len)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            MeasurementProgram::op(OBSERVABLES_A[rng.gen_range(0..OBSERVABLES_A.len())], i, j)
        })
        .collect();
    MeasurementProgram::new(ops).expect("valid program")
}

pub fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qubits: Vec<_> = (0..n).map(|_| StateVector::haar_random_qubit(&mut rng)).collect();
    StateVector::product(&qubits)
}

pub fn random_circuit(qubits: usize, size: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gates = (0..size)
        .map(|_| {
            let g = Gate::ALL[rng.gen_range(0..Gate::ALL.len())];
            let a = rng.gen_range(0..qubits);
            let ops = if g.arity() == 2 { vec![a, (a + rng.gen_range(1..qubits)) % qubits] } else { vec![a] };
            (g, ops)
        })
        .collect();
    Circuit::new(qubits, gates).expect("valid circuit")
}
