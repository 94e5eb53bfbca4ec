use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::step::map_locs;
use super::*;
use crate::machine::{AncillaPolicy, RunStatus, Runtime};
use crate::models::{make_model, ModelFamily};
use crate::quantum::{
    explore, fidelity_up_to_global_phase, ExploreLimits, ForcedOutcomes, Pauli, PauliOp, StateVector, C64,
};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn m2(a: [C64; 4]) -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &a)
}

fn oracle_gate(g: Gate) -> DMatrix<C64> {
    let (o, l, s) = (c(0.0, 0.0), c(1.0, 0.0), c(FRAC_1_SQRT_2, 0.0));
    match g {
        Gate::H => m2([s, s, s, -s]),
        Gate::T => m2([l, o, o, c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)]),
        Gate::X => m2([o, l, l, o]),
        Gate::Y => m2([o, c(0.0, -1.0), c(0.0, 1.0), o]),
        Gate::Z => m2([l, o, o, -l]),
        Gate::Cnot => unreachable!(),
    }
}

fn kron_all(factors: &[DMatrix<C64>]) -> DMatrix<C64> {
    factors.iter().fold(DMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Dense unitary built from Kronecker products, qubit 0 leftmost.
fn oracle_unitary(circ: &Circuit) -> DMatrix<C64> {
    let n = circ.qubits();
    let id = DMatrix::<C64>::identity(2, 2);
    let p0 = m2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let p1 = m2([c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let mut u = DMatrix::identity(1 << n, 1 << n);
    for (g, ops) in circ.gates() {
        let layer = if *g == Gate::Cnot {
            let pick = |ctl: &DMatrix<C64>, tgt: &DMatrix<C64>| {
                let fs: Vec<_> = (0..n)
                    .map(|q| {
                        if q == ops[0] {
                            ctl.clone()
                        } else if q == ops[1] {
                            tgt.clone()
                        } else {
                            id.clone()
                        }
                    })
                    .collect();
                kron_all(&fs)
            };
            pick(&p0, &id) + pick(&p1, &oracle_gate(Gate::X))
        } else {
            let fs: Vec<_> = (0..n).map(|q| if q == ops[0] { oracle_gate(*g) } else { id.clone() }).collect();
            kron_all(&fs)
        };
        u = layer * u;
    }
    u
}

fn apply(u: &DMatrix<C64>, s: &StateVector) -> StateVector {
    let v = u * DVector::from_column_slice(s.amplitudes());
    StateVector::from_amplitudes(v.as_slice().to_vec()).unwrap()
}

fn random_input(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let qs: Vec<StateVector> = (0..n).map(|_| StateVector::haar_random_qubit(rng)).collect();
    StateVector::product(&qs)
}

fn random_circuit(rng: &mut ChaCha8Rng, qubits: usize, len: usize) -> Circuit {
    let mut gates = Vec::new();
    for _ in 0..len {
        let g = Gate::ALL[rng.gen_range(0..Gate::ALL.len())];
        if g == Gate::Cnot && qubits < 2 {
            continue;
        }
        let a = rng.gen_range(0..qubits);
        let ops = if g == Gate::Cnot {
            let b = (a + rng.gen_range(1..qubits)) % qubits;
            vec![a, b]
        } else {
            vec![a]
        };
        gates.push((g, ops));
    }
    Circuit::new(qubits, gates).unwrap()
}

// ---- circuits ----

#[test]
fn circuit_text_round_trip() {
    let text = "# bell\nH 0\nCNOT 0 1\n\nT 1  # phase\nX 0\nY 1\nZ 0\n";
    let circ = parse_circuit(text).unwrap();
    assert_eq!(circ.qubits(), 2);
    assert_eq!(circ.len(), 6);
    assert_eq!(circ.gates()[1], (Gate::Cnot, vec![0, 1]));
    assert_eq!(parse_circuit(&circ.to_string()).unwrap(), circ);
    assert_eq!(parse_circuit("qubits: 3\nH 0\n").unwrap().qubits(), 3);
    assert!(parse_circuit("").unwrap().is_empty());
}

#[test]
fn circuit_errors() {
    assert!(matches!(parse_circuit("H 0\nS 1"), Err(CompileError::Parse { line: 2, .. })));
    assert!(matches!(parse_circuit("CNOT 0"), Err(CompileError::Parse { line: 1, .. })));
    assert!(matches!(parse_circuit("CNOT 1 1"), Err(CompileError::Parse { .. })));
    assert!(matches!(parse_circuit("H x"), Err(CompileError::Parse { .. })));
    assert!(parse_circuit("qubits: 1\nH 3").is_err());
    assert!(Circuit::new(1, vec![(Gate::H, vec![1])]).is_err());
    assert!(Circuit::new(2, vec![(Gate::Cnot, vec![0])]).is_err());
}

#[test]
fn unitary_matches_kronecker_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = rng.gen_range(1..=3);
        let circ = random_circuit(&mut rng, n, 6);
        let diff = (circ.unitary() - oracle_unitary(&circ)).norm();
        assert!(diff < 1e-12, "{circ}");
        let s = random_input(n, &mut rng);
        let f = fidelity_up_to_global_phase(&circ.apply(&s).unwrap(), &apply(&oracle_unitary(&circ), &s)).unwrap();
        assert!(f > 1.0 - 1e-12);
    }
}

// ---- gate steps ----

/// Runs `instrs` on operands ⊗ fresh slots ⊗ park cell and checks every
/// halted branch against `σ U |φ>`. Returns the halted probability mass.
fn check_program(gate: Gate, instrs: &[Instr<Loc>], slots: usize, outputs: &[usize], seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = gate.arity();
    let phi = random_input(k, &mut rng);
    let register = phi.tensor(&StateVector::zero(slots - k + 1));
    let program = map_locs(instrs, |l| match l {
        Loc::Slot(s) => s,
        Loc::Park => slots,
    });
    let ctl = ProgramController::new(program, k);
    let expected = apply(&oracle_gate_matrix(gate), &phi);
    let ex = explore(&ctl, ctl.initial(), register, ExploreLimits { max_steps: 80, min_probability: 0.0 }).unwrap();
    for b in &ex.halted {
        let out = b.state.extract(outputs).expect("outputs disentangled");
        let frame = PauliOp::new(b.control.1.clone(), 0);
        let corrected = out.apply_pauli(&frame, &(0..k).collect::<Vec<_>>()).unwrap();
        let f = fidelity_up_to_global_phase(&corrected, &expected).unwrap();
        assert!(f > 1.0 - 1e-9, "{gate}: classes {:?} fidelity {f}", b.control.1);
    }
    ex.halted_mass()
}

fn oracle_gate_matrix(g: Gate) -> DMatrix<C64> {
    oracle_unitary(&Circuit::new(g.arity(), vec![(g, (0..g.arity()).collect())]).unwrap())
}

#[test]
fn every_step_yields_pauli_times_gate() {
    for g in Gate::ALL {
        let step = step_of_simulation(g);
        for seed in 0..4 {
            let mass = check_program(g, &step.instrs, step.slots, &step.outputs, seed);
            assert!(mass > 1.0 - 1e-6, "{g}: halted mass {mass}");
        }
    }
}

#[test]
fn full_simulation_yields_the_gate_with_identity_class() {
    for g in Gate::ALL {
        let step = step_of_simulation(g);
        let full = step.full_program();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = g.arity();
        let phi = random_input(k, &mut rng);
        let register = phi.tensor(&StateVector::zero(step.slots - k + 1));
        let ctl = ProgramController::new(
            map_locs(&full, |l| match l {
                Loc::Slot(s) => s,
                Loc::Park => step.slots,
            }),
            k,
        );
        let ex =
            explore(&ctl, ctl.initial(), register, ExploreLimits { max_steps: 200, min_probability: 1e-14 }).unwrap();
        let expected = apply(&oracle_gate_matrix(g), &phi);
        for b in &ex.halted {
            assert!(b.control.1.iter().all(|&p| p == Pauli::I));
            let out = b.state.extract(&step.outputs).unwrap();
            assert!(fidelity_up_to_global_phase(&out, &expected).unwrap() > 1.0 - 1e-9, "{g}");
        }
        assert!(ex.halted_mass() > 1.0 - 1e-6, "{g}: {}", ex.halted_mass());
    }
}

#[test]
fn hadamard_step_groups_sixteen_tuples_into_four_classes() {
    let step = step_of_simulation(Gate::H);
    assert_eq!(step.observables(), ["ZZ", "XX", "XZ", "ZX"]);
    assert_eq!(step.ancillas(), 2);
    let mut counts = std::collections::HashMap::new();
    for t in 0..16u8 {
        let bits: Vec<u8> = (0..4).map(|k| (t >> (3 - k)) & 1).collect();
        let cls = step.classify(&bits).expect("four outcomes end the step");
        *counts.entry(cls[0]).or_insert(0) += 1;
    }
    assert_eq!(counts.len(), 4);
    assert!(counts.values().all(|&c| c == 4));
    assert_eq!(step.classify(&[0, 0, 0]), None);
}

#[test]
fn z_step_needs_at_most_a_z_correction() {
    let step = step_of_simulation(Gate::Z);
    for t in 0..8u8 {
        let bits: Vec<u8> = (0..3).map(|k| (t >> k) & 1).collect();
        let cls = step.classify(&bits).unwrap();
        assert!(matches!(cls[0], Pauli::I | Pauli::Z));
    }
    assert!(step.observables().iter().all(|o| ["XI", "ZZ"].contains(o)));
}

#[test]
fn t_step_uses_the_non_pauli_observable() {
    let step = step_of_simulation(Gate::T);
    assert!(step.observables().contains(&"XX+YX"));
    let table = make_model(ModelFamily::A);
    for g in Gate::ALL {
        for o in step_of_simulation(g).observables() {
            assert!(table.observables.allows(o, 2), "{o}");
        }
    }
}

#[test]
fn cnot_step_classes_are_xor_of_outcomes() {
    let step = step_of_simulation(Gate::Cnot);
    for t in 0..16u8 {
        let b: Vec<u8> = (0..4).map(|k| (t >> (3 - k)) & 1).collect();
        let cls = step.classify(&b).unwrap();
        assert_eq!(cls[0], Pauli::from_bits(false, b[0] ^ b[2] == 1));
        assert_eq!(cls[1], Pauli::from_bits(b[1] ^ b[3] == 1, false));
    }
}

/// Probability that one step leaves every operand in class I.
fn identity_probability(gate: Gate, instrs: &[Instr<Loc>], slots: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = gate.arity();
    let register = random_input(k, &mut rng).tensor(&StateVector::zero(slots - k + 1));
    let ctl = ProgramController::new(
        map_locs(instrs, |l| match l {
            Loc::Slot(s) => s,
            Loc::Park => slots,
        }),
        k,
    );
    let ex = explore(&ctl, ctl.initial(), register, ExploreLimits { max_steps: 200, min_probability: 0.0 }).unwrap();
    ex.halted.iter().filter(|b| b.control.1.iter().all(|&p| p == Pauli::I)).map(|b| b.probability).sum()
}

#[test]
fn each_loop_reaches_identity_with_probability_at_least_a_quarter() {
    for g in Gate::ALL {
        let step = step_of_simulation(g);
        let p = identity_probability(g, &step.instrs, step.slots);
        assert!(p >= 0.25 - 1e-9, "{g}: {p}");
    }
}

// ---- full simulation automata ----

#[test]
fn full_simulation_automata_are_finite_and_can_always_exit() {
    let max_step = Gate::ALL.iter().map(|&g| step_of_simulation(g).state_count()).max().unwrap();
    for g in Gate::ALL {
        let a = full_simulation(g);
        assert!(a.state_count() <= 1 + 4 * max_step, "{g}: {}", a.state_count());
        assert!(a.can_exit().iter().all(|&ok| ok), "{g}");
        assert!(a.transitions.iter().any(|t| t.2.is_none()));
        assert_eq!(a.transitions.len(), 2 * a.state_count());
    }
    let counts: Vec<usize> = Gate::ALL.iter().map(|&g| full_simulation(g).state_count()).collect();
    assert_eq!(counts, [36, 37, 26, 10, 40, 10]);
}

#[test]
fn exit_is_reachable_within_two_loop_iterations() {
    // From every state carrying a non-identity class at the loop head, some
    // outcome path of at most two Pauli steps reaches the exit.
    for g in Gate::ALL {
        let a = full_simulation(g);
        let horizon = 2 * 6 + 8;
        let mut frontier = vec![a.entry()];
        let mut exited = false;
        for _ in 0..horizon {
            let mut next = Vec::new();
            for s in frontier {
                for (_, to) in a.successors(s) {
                    match to {
                        None => exited = true,
                        Some(t) => next.push(t),
                    }
                }
            }
            next.sort();
            next.dedup();
            frontier = next;
        }
        assert!(exited, "{g}");
    }
}

#[test]
fn forcing_plus_outcomes_exits_after_one_step() {
    let step = step_of_simulation(Gate::H);
    let full = step.full_program();
    let ctl = ProgramController::new(
        map_locs(&full, |l| match l {
            Loc::Slot(s) => s,
            Loc::Park => 3,
        }),
        1,
    );
    let mut state = ctl.initial();
    let mut register = StateVector::from_bits(&[false]).tensor(&StateVector::zero(3));
    let mut forced = ForcedOutcomes::new([1.0; 4]);
    let mut n = 0;
    while let crate::quantum::ControlAction::Measure { observable, positions } =
        crate::quantum::Controller::action(&ctl, &state)
    {
        let (rec, post) = crate::quantum::measure(&register, &observable, &positions, &mut forced).unwrap();
        register = post;
        state = crate::quantum::Controller::advance(&ctl, &state, rec.outcome);
        n += 1;
    }
    assert_eq!(n, 4);
    let plus = StateVector::qubit(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap();
    assert!(fidelity_up_to_global_phase(&register.extract(&[2]).unwrap(), &plus).unwrap() > 1.0 - 1e-12);
}

#[test]
fn x_gate_corrects_itself_on_the_second_round() {
    // The first X step leaves class X; the correction step draws X again and X·X = I.
    let step = step_of_simulation(Gate::X);
    let full = step.full_program();
    let ctl = ProgramController::new(
        map_locs(&full, |l| match l {
            Loc::Slot(s) => s,
            Loc::Park => 2,
        }),
        1,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let phi = StateVector::haar_random_qubit(&mut rng);
    let mut register = phi.tensor(&StateVector::zero(2));
    let mut state = ctl.initial();
    let mut forced = ForcedOutcomes::new([1.0, 1.0, 1.0, 1.0, 1.0, -1.0]);
    let mut classes = Vec::new();
    while let crate::quantum::ControlAction::Measure { observable, positions } =
        crate::quantum::Controller::action(&ctl, &state)
    {
        let (rec, post) = crate::quantum::measure(&register, &observable, &positions, &mut forced).unwrap();
        register = post;
        state = crate::quantum::Controller::advance(&ctl, &state, rec.outcome);
        classes.push(state.1[0]);
    }
    assert_eq!(classes.len(), 6);
    assert_eq!(step.classify(&[0, 0, 0]), Some(vec![Pauli::X]));
    assert_eq!(classes[5], Pauli::I);
    assert_eq!(forced.remaining(), 0);
    let expected = apply(&oracle_gate(Gate::X), &phi);
    assert!(fidelity_up_to_global_phase(&register.extract(&[0]).unwrap(), &expected).unwrap() > 1.0 - 1e-12);
}

// ---- compiled machines ----

fn run_compiled(circ: &Circuit, input: StateVector, seed: u64, policy: AncillaPolicy) -> Option<StateVector> {
    let m = Arc::new(compile_circuit(circ));
    let mut rt = Runtime::new(m, input, 0, policy).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let run = rt.run(&mut rng, 5000).unwrap();
    (run.status == RunStatus::Halted).then(|| rt.output_window(circ.qubits()).unwrap())
}

#[test]
fn empty_circuit_halts_at_once() {
    let circ = Circuit::empty(2);
    let m = compile_circuit(&circ);
    assert!(m.delta.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let input = random_input(2, &mut rng);
    let out = run_compiled(&circ, input.clone(), 0, AncillaPolicy::Zero).unwrap();
    assert!(fidelity_up_to_global_phase(&out, &input).unwrap() > 1.0 - 1e-12);
}

#[test]
fn compiled_machines_are_two_head_family_machines() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let family = make_model(ModelFamily::A);
    for _ in 0..5 {
        let circ = random_circuit(&mut rng, 3, 5);
        let m = compile_circuit(&circ);
        assert_eq!(family.violations(&m), Vec::<String>::new());
    }
}

#[test]
fn hadamard_examples() {
    let plus = StateVector::qubit(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap();
    let h = parse_circuit("H 0").unwrap();
    let hh = parse_circuit("H 0\nH 0").unwrap();
    for seed in 0..20 {
        let out = run_compiled(&h, StateVector::zero(1), seed, AncillaPolicy::Zero).unwrap();
        assert!(fidelity_up_to_global_phase(&out, &plus).unwrap() > 1.0 - 1e-9);
        let out = run_compiled(&hh, StateVector::zero(1), seed, AncillaPolicy::Zero).unwrap();
        assert!(fidelity_up_to_global_phase(&out, &StateVector::zero(1)).unwrap() > 1.0 - 1e-9);
    }
}

#[test]
fn verify_examples() {
    let cnot = parse_circuit("CNOT 0 1").unwrap();
    let bell = parse_circuit("H 0\nCNOT 0 1").unwrap();
    let t = parse_circuit("T 0").unwrap();
    let plus = StateVector::qubit(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap();
    let t_plus = StateVector::qubit(c(FRAC_1_SQRT_2, 0.0), c(0.5, 0.5)).unwrap();
    let s = FRAC_1_SQRT_2;
    let phi_plus = StateVector::from_amplitudes(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
    for seed in 0..10 {
        let out = run_compiled(&cnot, StateVector::from_bits(&[true, false]), seed, AncillaPolicy::Zero).unwrap();
        assert!(fidelity_up_to_global_phase(&out, &StateVector::from_bits(&[true, true])).unwrap() > 1.0 - 1e-9);
        let out = run_compiled(&bell, StateVector::zero(2), seed, AncillaPolicy::Zero).unwrap();
        assert!(fidelity_up_to_global_phase(&out, &phi_plus).unwrap() > 1.0 - 1e-9);
        let out = run_compiled(&t, plus.clone(), seed, AncillaPolicy::Zero).unwrap();
        assert!(fidelity_up_to_global_phase(&out, &t_plus).unwrap() > 1.0 - 1e-9);
    }
}

#[test]
fn haar_ancillas_do_not_change_the_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..6 {
        let circ = random_circuit(&mut rng, 2, 4);
        let input = random_input(2, &mut rng);
        let expected = apply(&oracle_unitary(&circ), &input);
        if let Some(out) = run_compiled(&circ, input, k, AncillaPolicy::HaarRandom(k)) {
            assert!(fidelity_up_to_global_phase(&out, &expected).unwrap() > 1.0 - 1e-9, "{circ}");
        }
    }
}

#[test]
fn state_counts_are_additive_over_gates() {
    // start + gate automata + homing of each displaced qubit + parking state.
    let homing = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let len = rng.gen_range(1..=8);
        let circ = random_circuit(&mut rng, n, len);
        let mut at = vec![0usize; n];
        let mut expected = 2;
        for (g, ops) in circ.gates() {
            expected += full_simulation(*g).state_count();
            match g {
                Gate::H => at[ops[0]] = (at[ops[0]] + 2) % 3,
                Gate::T => at[ops[0]] = (at[ops[0]] + 1) % 3,
                _ => {}
            }
        }
        expected += homing * at.iter().filter(|&&s| s != 0).count();
        assert_eq!(compile_circuit(&circ).state_count(), expected, "{circ}");
    }
    let single: Vec<usize> = Gate::ALL
        .iter()
        .map(|&g| compile_circuit(&Circuit::new(2, vec![(g, (0..g.arity()).collect())]).unwrap()).state_count())
        .collect();
    assert_eq!(single, [70, 71, 28, 12, 42, 12]);
}

#[test]
fn verify_reports_single_gate_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for g in Gate::ALL {
        let circ = Circuit::new(2, vec![(g, (0..g.arity()).collect())]).unwrap();
        let report = verify_compiled(&circ, 10, 5000, &mut rng).unwrap();
        assert_eq!(report.failures, 0, "{g}: {report:?}");
        assert!(report.passed(0.95), "{g}: {report:?}");
        assert_eq!(report.state_count, compile_circuit(&circ).state_count());
    }
}

#[test]
fn ancillas_are_disentangled_after_each_gate() {
    // Run gate prefixes and check every logical cell is pure at halting.
    let circ = parse_circuit("H 0\nCNOT 0 1\nT 1\nH 1\nCNOT 1 0").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for len in 1..=circ.len() {
        let prefix = Circuit::new(2, circ.gates()[..len].to_vec()).unwrap();
        let m = Arc::new(compile_circuit(&prefix));
        let mut rt = Runtime::new(m, StateVector::zero(2), 0, AncillaPolicy::Zero).unwrap();
        let run = rt.run(&mut rng, 5000).unwrap();
        assert_eq!(run.status, RunStatus::Halted);
        let positions: Vec<usize> =
            (0..2).map(|q| rt.cell_index(crate::machine::Cell { tape: 0, index: q }).unwrap()).collect();
        let purity = rt.register().subsystem_purity(&positions).unwrap();
        assert!((purity - 1.0).abs() < 1e-9, "prefix {len}: {purity}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compiled_random_circuits_match_the_dense_oracle(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let len = rng.gen_range(0..=5);
        let circ = random_circuit(&mut rng, n, len);
        let input = random_input(n, &mut rng);
        let expected = apply(&oracle_unitary(&circ), &input);
        if let Some(out) = run_compiled(&circ, input, seed, AncillaPolicy::Zero) {
            prop_assert!(fidelity_up_to_global_phase(&out, &expected).unwrap() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn classifier_is_total_on_fixed_length_steps(t in 0u8..16) {
        for g in [Gate::H, Gate::Cnot] {
            let bits: Vec<u8> = (0..4).map(|k| (t >> k) & 1).collect();
            prop_assert!(step_of_simulation(g).classify(&bits).is_some());
        }
    }
}
