//! `verify-protocol`: exhaustive path enumeration plus seeded sampling for
//! the built-in measurement protocols.

use anyhow::Result;
use rand::Rng;

use mqtm_core::protocols::{
    bell_prepare_cross_tape, bell_prepare_frames, classical_write, state_transfer, state_transfer_until_identity,
    teleport, ProtocolError, DEFAULT_MAX_ROUNDS,
};
use mqtm_core::quantum::{enumerate_paths, ForcedOutcomes, PathScript};
use mqtm_core::{fidelity_up_to_global_phase, StateVector, C64};

use crate::commands::trial_rng;
use crate::ProtocolName;

const FIDELITY: f64 = 1.0 - 1e-9;

/// Inputs drawn for the exhaustive checks.
const ENUMERATED_INPUTS: usize = 20;

struct Report {
    failed: bool,
}

impl Report {
    fn check(&mut self, ok: bool, what: &str, detail: String) {
        self.failed |= !ok;
        println!("{} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    fidelity_up_to_global_phase(a, b).unwrap_or(0.0)
}

fn haar(rng: &mut impl Rng) -> StateVector {
    StateVector::haar_random_qubit(rng)
}

/// Tolerance of a sampled mean: five standard errors.
fn five_sigma(variance: f64, trials: usize) -> f64 {
    5.0 * (variance / trials.max(1) as f64).sqrt()
}

pub fn verify(name: ProtocolName, trials: usize, seed: u64) -> Result<u8> {
    println!("seed: {seed}");
    let mut report = Report { failed: false };
    match name {
        ProtocolName::Transfer => transfer(&mut report, trials, seed)?,
        ProtocolName::BellPrep => bell_prep(&mut report, trials, seed)?,
        ProtocolName::Teleport => teleport_check(&mut report, trials, seed)?,
        ProtocolName::Write => write(&mut report, trials, seed)?,
    }
    Ok(if report.failed { 3 } else { 0 })
}

fn transfer(report: &mut Report, trials: usize, seed: u64) -> Result<()> {
    let mut rng = trial_rng(seed, 0);
    let (mut paths, mut good, mut mass_ok) = (0, 0, true);
    for _ in 0..ENUMERATED_INPUTS {
        let psi = haar(&mut rng);
        let input = psi.tensor(&haar(&mut rng));
        let found = enumerate_paths(|s: &mut PathScript| {
            let mut reg = input.clone();
            let r = state_transfer(&mut reg, 0, 1, s)?;
            Ok::<_, ProtocolError>(fidelity(&reg.extract(&[1])?, &psi.apply_pauli(r.frame.op(), &[0])?))
        })?;
        mass_ok &= (found.iter().map(|p| p.probability).sum::<f64>() - 1.0).abs() < 1e-12 && found.len() == 8;
        paths += found.len();
        good += found.iter().filter(|p| p.value >= FIDELITY).count();
    }
    report.check(good == paths && mass_ok, "paths", format!("{good}/{paths} outcome paths carry the frame image"));

    let mut reg = haar(&mut rng).tensor(&StateVector::zero(1));
    let r = state_transfer(&mut reg, 0, 1, &mut ForcedOutcomes::new([1.0; 3]))?;
    report.check(
        r.frame.is_identity() && r.rounds == 1,
        "all +1",
        format!("frame {} in {} round", r.frame.op(), r.rounds),
    );

    let (mut rounds, mut ok) = (0usize, 0usize);
    for k in 0..trials {
        let mut rng = trial_rng(seed, k as u64 + 1);
        let psi = haar(&mut rng);
        let mut reg = psi.tensor(&StateVector::zero(2));
        let r = state_transfer_until_identity(&mut reg, 0, &[1, 2], &mut rng, DEFAULT_MAX_ROUNDS)?;
        rounds += r.rounds;
        ok += usize::from(fidelity(&reg.extract(&[r.output])?, &psi) >= FIDELITY);
    }
    report.check(
        ok == trials,
        "until identity",
        format!("{ok}/{trials} trials exact, mean rounds {:.3}", rounds as f64 / trials.max(1) as f64),
    );
    Ok(())
}

fn bell_prep(report: &mut Report, trials: usize, seed: u64) -> Result<()> {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut amps = vec![zero; 8];
    amps[0] = h;
    amps[6] = h;
    let bell = StateVector::from_amplitudes(amps)?;

    let mut rng = trial_rng(seed, 0);
    let (mut paths, mut good) = (0, 0);
    for _ in 0..ENUMERATED_INPUTS {
        let input = StateVector::product(&[haar(&mut rng), haar(&mut rng), haar(&mut rng)]);
        let found = enumerate_paths(|s: &mut PathScript| {
            let mut reg = input.clone();
            let r = bell_prepare_cross_tape(&mut reg, 0, 1, 2, s)?;
            let [fa, fb, fc] = bell_prepare_frames(&r.bits().try_into().unwrap());
            let expected = bell.apply_pauli(&fa, &[0])?.apply_pauli(&fb, &[1])?.apply_pauli(&fc, &[2])?;
            Ok::<_, ProtocolError>(fidelity(&reg, &expected))
        })?;
        paths += found.len();
        good += found.iter().filter(|p| p.value >= FIDELITY).count();
    }
    let expected_paths = 64 * ENUMERATED_INPUTS;
    report.check(
        good == expected_paths && paths == expected_paths,
        "paths",
        format!("{}/64 outcome paths fidelity 1 on each of {ENUMERATED_INPUTS} inputs", good / ENUMERATED_INPUTS),
    );

    let mut ok = 0;
    for k in 0..trials {
        let mut rng = trial_rng(seed, k as u64 + 1);
        let mut reg = StateVector::product(&[haar(&mut rng), haar(&mut rng), haar(&mut rng)]);
        let r = bell_prepare_cross_tape(&mut reg, 0, 1, 2, &mut rng)?;
        // The frame covers (a, b); the helper is left in X^n|0>.
        let helper = &bell_prepare_frames(&r.bits().try_into().unwrap())[2];
        let expected = bell.apply_pauli(helper, &[2])?;
        ok += usize::from(fidelity(&r.frame.undo(&reg)?, &expected) >= FIDELITY);
    }
    report.check(ok == trials, "sampled", format!("{ok}/{trials} trials give the Bell pair"));
    Ok(())
}

fn teleport_check(report: &mut Report, trials: usize, seed: u64) -> Result<()> {
    let mut rng = trial_rng(seed, 0);
    let psi = haar(&mut rng);
    let found = enumerate_paths(|s: &mut PathScript| {
        let mut reg = psi.tensor(&StateVector::zero(3));
        let r = teleport(&mut reg, 0, 1, 2, 3, s)?;
        let f = fidelity(&reg.extract(&[1])?, &psi.apply_pauli(r.frame.op(), &[0])?);
        Ok::<_, ProtocolError>((r.frame.is_identity(), f))
    })?;
    let good = found.iter().filter(|p| p.value.1 >= FIDELITY).count();
    report.check(good == found.len(), "paths", format!("{good}/{} outcome paths carry the frame image", found.len()));
    let identity: f64 = found.iter().filter(|p| p.value.0).map(|p| p.probability).sum();
    report.check((identity - 0.25).abs() < 1e-12, "identity frame", format!("probability {identity:.12} (exact 1/4)"));

    let mut hits = 0usize;
    for k in 0..trials {
        let mut rng = trial_rng(seed, k as u64 + 1);
        let mut reg = haar(&mut rng).tensor(&StateVector::zero(3));
        hits += usize::from(teleport(&mut reg, 0, 1, 2, 3, &mut rng)?.frame.is_identity());
    }
    let freq = hits as f64 / trials.max(1) as f64;
    report.check(
        (freq - 0.25).abs() <= five_sigma(0.1875, trials),
        "sampled identity frame",
        format!("{hits}/{trials} = {freq:.4}"),
    );
    Ok(())
}

fn write(report: &mut Report, trials: usize, seed: u64) -> Result<()> {
    for bit in [0u8, 1] {
        let (mut rounds, mut ok) = (0usize, 0usize);
        for k in 0..trials {
            let mut rng = trial_rng(seed, 2 * k as u64 + bit as u64);
            let mut reg = haar(&mut rng);
            rounds += classical_write(&mut reg, 0, bit, &mut rng, DEFAULT_MAX_ROUNDS)?.rounds;
            ok += usize::from(fidelity(&reg, &StateVector::basis(1, bit as usize)) >= FIDELITY);
        }
        let mean = rounds as f64 / trials.max(1) as f64;
        report.check(
            ok == trials && (mean - 2.0).abs() <= five_sigma(2.0, trials),
            &format!("write {bit}"),
            format!("{ok}/{trials} cells hold {bit}, mean rounds {mean:.3}"),
        );
    }
    Ok(())
}
