use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::machine::{AncillaPolicy, RunStatus, Runtime};
use crate::protocols::machines::{bell_measure_machine, teleport_machine, transfer_machine, write_machine};
use crate::quantum::{fidelity_up_to_global_phase, ForcedOutcomes, StateVector, C64};

fn not_tm() -> ClassicalTM {
    ClassicalTM::new("q", &["h"]).rule("q", 0, "h", 1, 0).rule("q", 1, "h", 0, 0)
}

fn increment_tm() -> ClassicalTM {
    ClassicalTM::new("r0", &["h"])
        .rule("r0", 0, "r1", 0, 1)
        .rule("r0", 1, "r1", 1, 1)
        .rule("r1", 0, "c", 0, 1)
        .rule("r1", 1, "c", 1, 1)
        .rule("c", 1, "c", 0, -1)
        .rule("c", 0, "h", 1, 0)
}

fn run_compiled(tm: &ClassicalTM, input: &[u8], seed: u64) -> Runtime {
    let m = compile_classical_tm(tm).unwrap();
    let bits: Vec<bool> = input.iter().map(|&b| b == 1).collect();
    let mut rt = Runtime::new(m, StateVector::from_bits(&bits), 0, AncillaPolicy::Zero).unwrap();
    let r = rt.run(&mut ChaCha8Rng::seed_from_u64(seed), 10_000).unwrap();
    assert_eq!(r.status, RunStatus::Halted);
    rt
}

#[test]
fn family_tables() {
    let c = make_model(ModelFamily::C);
    assert_eq!(c.observables, ObservableTable::Named(vec!["X".into(), "Z".into()]));
    assert!(c.moves.contains(&[-1]) && c.moves.contains(&[1]) && !c.moves.contains(&[2]));
    let f = make_model(ModelFamily::F);
    assert!(f.moves.contains(&[0, -7]) && !f.moves.contains(&[1, 0]));
    assert!(f.observables.allows("ZX", 2) && !f.observables.allows("XX+YX", 2));
    let b = make_model(ModelFamily::B);
    assert!(b.observables.allows("Y", 1) && !b.observables.allows("XX", 2));
    assert_eq!("m_d".parse::<ModelFamily>().unwrap(), ModelFamily::D);
    assert!(matches!("G".parse::<ModelFamily>(), Err(ModelError::UnknownFamily(_))));
}

#[test]
fn descriptors_admit_their_machines() {
    for family in ModelFamily::ALL {
        let d = make_model(family);
        let obs: &[&str] = match family {
            ModelFamily::B => &["Y"],
            ModelFamily::C => &["X", "Z"],
            _ => &["XX", "ZZ"],
        };
        assert!(d.admits(&d.machine("m", obs).unwrap()), "{family}");
    }
    assert!(make_model(ModelFamily::F).admits(&transfer_machine()));
    assert!(make_model(ModelFamily::D).admits(&teleport_machine()));
    assert!(make_model(ModelFamily::A).admits(&bell_measure_machine()));
    assert!(make_model(ModelFamily::C).admits(&write_machine(0)));
}

#[test]
fn descriptors_reject_foreign_machines() {
    let c = make_model(ModelFamily::C);
    let with_y = c.machine("y", &["X", "Y"]).unwrap();
    assert!(c.violations(&with_y).iter().any(|v| v.contains("`Y`")));
    assert!(!make_model(ModelFamily::B).admits(&bell_measure_machine()));

    let f = make_model(ModelFamily::F);
    let mut moving = f.machine("m", &["XX"]).unwrap();
    moving.moves = crate::machine::MoveSet::unbounded(2);
    moving.add_transition("start", crate::machine::Outcome::initial(), "s", "XX", &[1, 0]);
    assert!(f.violations(&moving).iter().any(|v| v.contains("move")));
    assert!(!make_model(ModelFamily::E).admits(&transfer_machine()));
}

#[test]
fn classical_oracle_runs() {
    assert_eq!(not_tm().run(&[0], 10).cells(0, 1), vec![1]);
    assert_eq!(not_tm().run(&[1], 10).cells(0, 1), vec![0]);
    let inc = increment_tm();
    for x in 0..8u8 {
        let bits = [x >> 2 & 1, x >> 1 & 1, x & 1];
        let run = inc.run(&bits, 100);
        assert!(run.halted);
        let y = (x + 1) % 8;
        assert_eq!(run.cells(0, 3), vec![y >> 2 & 1, y >> 1 & 1, y & 1], "input {x}");
    }
    assert_eq!(inc.run(&[1, 1, 1], 100).cells(-1, 4), vec![1, 0, 0, 0]);
    let looping = ClassicalTM::new("q", &[]).rule("q", 0, "q", 0, 1);
    assert!(!looping.run(&[], 50).halted);
}

#[test]
fn tm_text_round_trip() {
    let tm = increment_tm();
    assert_eq!(parse_classical_tm(&tm.to_string()).unwrap(), tm);
    let text = "states: q h\ninitial: q\nhalt: h\n# flip\nq 0 -> h 1 0\nq 1 -> h 0 +0\n";
    assert_eq!(parse_classical_tm(text).unwrap(), not_tm());
    assert!(matches!(parse_classical_tm("initial: q\nq 2 -> q 0 0\n"), Err(ModelError::Parse { line: 2, .. })));
    assert!(matches!(parse_classical_tm("initial: q\nq 0 -> q 0 2\n"), Err(ModelError::Invalid(_))));
    assert!(matches!(parse_classical_tm("q 0 -> q 0 0\n"), Err(ModelError::Parse { .. })));
}

#[test]
fn compiled_machine_shape() {
    let tm = increment_tm();
    let m = compile_classical_tm(&tm).unwrap();
    assert!(make_model(ModelFamily::C).admits(&m));
    assert_eq!(m.state_count(), 1 + tm.states.len() + 2 * tm.rules.len());
}

#[test]
fn write_one_and_halt() {
    let tm = ClassicalTM::new("q", &["h"]).rule("q", 0, "h", 1, 0);
    for seed in 0..50 {
        let rt = run_compiled(&tm, &[0], seed);
        assert_eq!(read_classical_cells(&rt, 0, 0, 1), Some(vec![1]));
    }
}

#[test]
fn compiled_tms_agree_with_the_classical_oracle() {
    for (tm, width) in [(not_tm(), 1usize), (increment_tm(), 3)] {
        for x in 0..(1u8 << width) {
            let bits: Vec<u8> = (0..width).rev().map(|k| x >> k & 1).collect();
            let expected = tm.run(&bits, 1000).cells(-1, width + 1);
            for seed in 0..20 {
                let rt = run_compiled(&tm, &bits, seed);
                assert_eq!(read_classical_cells(&rt, 0, -1, width + 1).as_ref(), Some(&expected));
                for q in 0..rt.register().num_qubits() {
                    assert!(rt.register().single_qubit_purity(q).unwrap() > 1.0 - 1e-10);
                }
            }
        }
    }
}

#[test]
fn program_text() {
    let p = parse_program("# demo\nXX 0 1\nXX+YX 2 0 # t\n").unwrap();
    assert_eq!(p.ops, vec![MeasurementProgram::op("XX", 0, 1), MeasurementProgram::op("XX+YX", 2, 0)]);
    assert_eq!(p.qubit_count(), 3);
    assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    assert!(matches!(parse_program("XX 0\n"), Err(ModelError::Parse { line: 1, .. })));
    assert!(parse_program("YY 0 1\n").is_err());
    assert!(parse_program("XX 1 1\n").is_err());
}

fn prog(ops: &[(&str, usize, usize)]) -> MeasurementProgram {
    MeasurementProgram::new(ops.iter().map(|&(o, i, j)| MeasurementProgram::op(o, i, j)).collect()).unwrap()
}

#[test]
fn routing_lengths() {
    // Different parities: measured in place.
    assert_eq!(Reduction::new(ModelFamily::D, &prog(&[("XX", 1, 2)]), 3).unwrap().straight_line_length(), 1);
    // Same parity: teleport out (8), measure, teleport back (8).
    assert_eq!(Reduction::new(ModelFamily::D, &prog(&[("ZZ", 2, 4)]), 5).unwrap().straight_line_length(), 17);
    assert_eq!(Reduction::new(ModelFamily::E, &prog(&[("ZX", 0, 1)]), 2).unwrap().straight_line_length(), 17);
    assert_eq!(Reduction::new(ModelFamily::F, &prog(&[("XZ", 0, 1)]), 2).unwrap().straight_line_length(), 7);
    assert_eq!(Reduction::new(ModelFamily::F, &prog(&[("ZI", 0, 1)]), 2).unwrap().straight_line_length(), 1);
    assert!(matches!(Reduction::new(ModelFamily::C, &prog(&[]), 1), Err(ModelError::NoReduction(ModelFamily::C))));
    assert!(Reduction::new(ModelFamily::F, &prog(&[("XX", 0, 3)]), 2).is_err());
}

#[test]
fn reductions_respect_family_tables() {
    let p = prog(&[("XX+YX", 0, 2), ("XX+XY", 1, 3), ("XZ", 3, 1), ("ZI", 2, 0), ("ZX", 0, 1)]);
    for family in [ModelFamily::D, ModelFamily::E, ModelFamily::F] {
        let red = Reduction::new(family, &p, 4).unwrap();
        let d = make_model(family);
        let mut st = red.initial_state();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut n = 0;
        while let crate::quantum::ControlAction::Measure { observable, positions } =
            crate::quantum::Controller::action(&red, &st)
        {
            assert!(d.observables.allows(observable.name(), 2), "{family}: {}", observable.name());
            let tapes: Vec<usize> = positions.iter().map(|&q| red.layout().tape(q)).collect();
            assert_eq!(tapes, vec![0, 1], "{family}: head order");
            let out = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            st = crate::quantum::Controller::advance(&red, &st, out);
            n += 1;
            assert!(n < 10_000);
        }
        if family == ModelFamily::F {
            let a = red.layout().aux[0][0];
            assert_eq!(red.layout().sites[a], (0, 0));
        }
    }
}

// Independent flat oracle: dense projectors (I ± O)/2 over the whole register.

fn pauli_matrix(c: char) -> DMatrix<C64> {
    let (o, i) = (C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    let l = C64::new(1.0, 0.0);
    match c {
        'I' => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        'X' => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        'Y' => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        'Z' => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => unreachable!(),
    }
}

fn embedded(name: &str, i: usize, j: usize, n: usize) -> DMatrix<C64> {
    let dim = 1 << n;
    let mut total = DMatrix::zeros(dim, dim);
    let terms: Vec<&str> = name.split('+').collect();
    let scale = C64::new(1.0 / (terms.len() as f64).sqrt(), 0.0);
    for t in terms {
        let c: Vec<char> = t.chars().collect();
        let mut m = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for q in 0..n {
            let f = if q == i {
                c[0]
            } else if q == j {
                c[1]
            } else {
                'I'
            };
            m = m.kronecker(&pauli_matrix(f));
        }
        total += m * scale;
    }
    total
}

fn oracle(p: &MeasurementProgram, input: &StateVector) -> Vec<Weighted> {
    let n = input.num_qubits();
    let mut layer = vec![(Vec::new(), DVector::from_column_slice(input.amplitudes()))];
    for op in &p.ops {
        let o = embedded(&op.observable, op.qubits[0], op.qubits[1], n);
        let id = DMatrix::<C64>::identity(1 << n, 1 << n);
        let mut next = Vec::new();
        for (bits, v) in layer {
            for (bit, sign) in [(0u8, 1.0), (1, -1.0)] {
                let proj = (&id + &o * C64::new(sign, 0.0)) * C64::new(0.5, 0.0);
                let w = proj * &v;
                if w.norm_squared() > 1e-14 {
                    let mut b: Vec<u8> = bits.clone();
                    b.push(bit);
                    next.push((b, w));
                }
            }
        }
        layer = next;
    }
    layer
        .into_iter()
        .map(|(outcomes, v)| Weighted {
            outcomes,
            probability: v.norm_squared(),
            state: StateVector::normalized(v.iter().copied().collect()).unwrap(),
        })
        .collect()
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    StateVector::normalized((0..1 << n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .unwrap()
}

#[test]
fn flat_distribution_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = prog(&[("XX+YX", 0, 1), ("ZX", 1, 2), ("XX+XY", 2, 0), ("XI", 1, 0)]);
    let input = random_state(3, &mut rng);
    let flat = flat_distribution(&p, &input).unwrap();
    assert!(total_variation(&flat, &oracle(&p, &input)) < 1e-12);
}

#[test]
fn reductions_match_flat_execution_on_fixed_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let programs = [
        prog(&[("XX", 1, 2)]),
        prog(&[("ZZ", 0, 2)]),
        prog(&[("XX+YX", 0, 2), ("XZ", 2, 1)]),
        prog(&[("XX+XY", 1, 0), ("ZI", 1, 0), ("XX", 0, 1)]),
    ];
    for p in &programs {
        let input = random_state(3, &mut rng);
        let expected = oracle(p, &input);
        for family in [ModelFamily::A, ModelFamily::D, ModelFamily::E, ModelFamily::F] {
            let (got, residual) = reduction_distribution(family, p, &input).unwrap();
            let tv = total_variation(&expected, &got);
            assert!(tv < 1e-9 && residual < 1e-9, "{family} on {p}: tv {tv:e}, residual {residual:e}");
        }
    }
}

#[test]
fn sampled_reductions_land_on_flat_outcome_states() {
    let p = prog(&[("ZZ", 0, 2), ("XX+YX", 2, 0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let input = random_state(3, &mut rng);
    let expected = oracle(&p, &input);
    for family in [ModelFamily::D, ModelFamily::E, ModelFamily::F] {
        for _ in 0..20 {
            let run = simulate_program_on(family, &p, &input, &mut rng, 100_000).unwrap();
            let hit = expected.iter().find(|w| w.outcomes == run.outcomes).unwrap();
            assert!(fidelity_up_to_global_phase(&hit.state, &run.logical).unwrap() > 1.0 - 1e-9);
            assert_eq!(run.frame.qubits(), &[0, 1, 2]);
        }
    }
}

#[test]
fn forced_identity_transfers_need_no_frame() {
    let p = prog(&[("ZX", 0, 1)]);
    let input = StateVector::product(&[
        StateVector::qubit(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap(),
        StateVector::qubit(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap(),
    ]);
    let mut forced = ForcedOutcomes::new([1.0; 7]);
    let run = simulate_program_on(ModelFamily::F, &p, &input, &mut forced, 100).unwrap();
    assert!(run.frame.is_identity());
    assert_eq!(run.records.len(), 7);
    assert_eq!(run.outcomes, vec![0]);
    let step = simulate_program_on(ModelFamily::F, &p, &input, &mut ForcedOutcomes::new([1.0; 3]), 3);
    assert!(matches!(step, Err(ModelError::StepLimit(3))));
}
