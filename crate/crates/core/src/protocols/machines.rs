//! The same subroutines written as machines over the restricted model layouts.

use crate::machine::{HeadSpec, MachineSpec, MoveRange, MoveSet, Outcome, TapeSpec};

fn both(m: &mut MachineSpec, state: &str, next: &str, observable: &str, moves: &[i64]) {
    m.add_transition(state, Outcome::plus(), next, observable, moves);
    m.add_transition(state, Outcome::minus(), next, observable, moves);
}

/// Straight-line machine: `steps[0]` fires from the initial configuration and
/// every later step fires on either outcome of the previous one.
fn straight_line(m: &mut MachineSpec, steps: &[(&str, &[i64])]) {
    let name = |k: usize| if k == 0 { "start".to_string() } else { format!("s{k}") };
    for (k, (obs, moves)) in steps.iter().enumerate() {
        if k == 0 {
            m.add_transition("start", Outcome::initial(), &name(1), obs, moves);
        } else {
            both(m, &name(k), &name(k + 1), obs, moves);
        }
    }
}

fn one_tape_one_head(name: &str) -> MachineSpec {
    let mut m =
        MachineSpec::new(name, vec![TapeSpec::infinite("main")], vec![HeadSpec::new("h", "main", 0)], &["X", "Z"])
            .expect("builtin observables");
    m.moves = MoveSet(vec![MoveRange::Bounded(-1, 1)]);
    m
}

/// Classical write of `bit` on the cell under the head: (X, Z) repeated until
/// the Z outcome encodes the bit.
pub fn write_machine(bit: u8) -> MachineSpec {
    let mut m = one_tape_one_head(&format!("write{bit}"));
    m.add_transition("start", Outcome::initial(), "x", "X", &[0]);
    both(&mut m, "x", "z", "Z", &[0]);
    m.add_transition("z", Outcome::from_bit(1 - bit), "x", "X", &[0]);
    m
}

/// One Z-measurement of the cell under the head.
pub fn read_machine() -> MachineSpec {
    let mut m = one_tape_one_head("read");
    m.add_transition("start", Outcome::initial(), "done", "Z", &[0]);
    m
}

/// State transfer from cell 0 of the infinite tape onto the one-qubit tape.
pub fn transfer_machine() -> MachineSpec {
    let mut m = MachineSpec::new(
        "transfer",
        vec![TapeSpec::finite("a", 1), TapeSpec::infinite("main")],
        vec![HeadSpec::new("ha", "a", 0), HeadSpec::new("hj", "main", 0)],
        &["ZI", "XX", "IZ"],
    )
    .expect("builtin observables");
    m.moves = MoveSet(vec![MoveRange::Bounded(0, 0), MoveRange::Any]);
    m.input_head = "hj".into();
    m.output_head = "ha".into();
    straight_line(&mut m, &[("ZI", &[0, 0]), ("XX", &[0, 0]), ("IZ", &[0, 0])]);
    m
}

/// Bell measurement of cells 0 and 1 of a single tape with two heads.
pub fn bell_measure_machine() -> MachineSpec {
    let mut m = MachineSpec::new(
        "bell-measure",
        vec![TapeSpec::infinite("main")],
        vec![HeadSpec::new("h1", "main", 0), HeadSpec::new("h2", "main", 0)],
        &["ZZ", "XX"],
    )
    .expect("builtin observables");
    straight_line(&mut m, &[("ZZ", &[0, 1]), ("XX", &[0, 0])]);
    m
}

fn two_tapes(name: &str) -> MachineSpec {
    MachineSpec::new(
        name,
        vec![TapeSpec::infinite("upper"), TapeSpec::infinite("lower")],
        vec![HeadSpec::new("hu", "upper", 0), HeadSpec::new("hl", "lower", 0)],
        &["ZI", "IZ", "XX", "ZZ"],
    )
    .expect("builtin observables")
}

/// Bell pair on upper cells 0 (`a`) and 1 (`b`) through lower cell 0 (`c`).
pub fn bell_prepare_machine() -> MachineSpec {
    let mut m = two_tapes("bell-prepare");
    straight_line(
        &mut m,
        &[("ZI", &[0, 0]), ("ZI", &[1, 0]), ("IZ", &[0, 0]), ("XX", &[-1, 0]), ("XX", &[1, 0]), ("IZ", &[0, 0])],
    );
    m
}

/// Teleports lower cell 0 (`j`, the input) to upper cell 0 (`a`) using upper
/// cell 1 (`b`) and lower cell 1 (`c`). A last Z-measurement of `j` brings the
/// output head back onto `a`.
pub fn teleport_machine() -> MachineSpec {
    let mut m = two_tapes("teleport");
    m.input_head = "hl".into();
    m.output_head = "hu".into();
    straight_line(
        &mut m,
        &[
            ("ZI", &[0, 0]),
            ("ZI", &[1, 0]),
            ("IZ", &[0, 1]),
            ("XX", &[-1, 0]),
            ("XX", &[1, 0]),
            ("IZ", &[0, 0]),
            ("ZZ", &[0, -1]),
            ("XX", &[0, 0]),
            ("IZ", &[-1, 0]),
        ],
    );
    m
}
