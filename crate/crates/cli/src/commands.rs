use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mqtm_core::exec_tree::as_dyadic;
use mqtm_core::models::{compile_classical_tm, parse_classical_tm};
use mqtm_core::{
    build_tree, compile_circuit, parse_circuit, parse_machine, termination_probability_bounds, verify_compiled,
    write_machine, AncillaPolicy, MachineSpec, RunStatus, Runtime, StateVector, TreeLimits,
};

use crate::input::{parse_input, render_state};
use crate::{input_error, CompileArgs, MachineInput, Policy, RunArgs, TreeArgs, TrialArgs, VerifyCircuitArgs};

/// Generator for trial `k` of a run seeded with `seed`: one ChaCha stream per trial.
pub fn trial_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load(m: &MachineInput) -> Result<(Arc<MachineSpec>, StateVector)> {
    let machine =
        parse_machine(&read(&m.machine)?).map_err(|e| input_error(format!("{}: {e}", m.machine.display())))?;
    let input = parse_input(&m.input).map_err(|e| input_error(format!("--input: {e}")))?;
    Ok((Arc::new(machine), input))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Trial {
    runtime: Runtime,
    status: RunStatus,
    steps: usize,
}

/// The Haar ancilla seed is drawn from the trial stream before any outcome.
fn run_trial(machine: &Arc<MachineSpec>, input: &StateVector, a: &RunArgs, offset: i64, k: u64) -> Result<Trial> {
    let mut rng = trial_rng(a.seed, k);
    let policy = match a.policy {
        Policy::Zero => AncillaPolicy::Zero,
        Policy::Haar => AncillaPolicy::HaarRandom(rng.next_u64()),
    };
    let mut runtime = Runtime::new(machine.clone(), input.clone(), offset, policy)?;
    let r = runtime.run(&mut rng, a.max_steps)?;
    Ok(Trial { runtime, status: r.status, steps: r.steps })
}

fn width(a: &RunArgs, input: &StateVector) -> usize {
    a.width.unwrap_or(input.num_qubits().max(1))
}

pub fn run(a: &RunArgs) -> Result<u8> {
    let (machine, input) = load(&a.machine)?;
    let t = run_trial(&machine, &input, a, a.machine.offset, 0)?;
    println!("seed: {}", a.seed);
    for (k, rec) in t.runtime.trace().iter().enumerate() {
        println!("step {}: {}", k + 1, rec.describe(&machine));
    }
    match t.status {
        RunStatus::Halted => {
            println!("status: halted after {} steps", t.steps);
            println!("output: {}", render_state(&t.runtime.output_window(width(a, &input))?));
            Ok(0)
        }
        RunStatus::StepLimit => {
            println!("status: step limit after {} steps", t.steps);
            Ok(2)
        }
    }
}

pub fn sample(a: &TrialArgs) -> Result<u8> {
    let (machine, input) = load(&a.run.machine)?;
    println!("seed: {}", a.run.seed);
    let mut limited = 0;
    for k in 0..a.trials {
        let t = run_trial(&machine, &input, &a.run, a.run.machine.offset, k as u64)?;
        match t.status {
            RunStatus::Halted => {
                let out = render_state(&t.runtime.output_window(width(&a.run, &input))?);
                println!("trial {k}: halted steps={} output={out}", t.steps);
            }
            RunStatus::StepLimit => {
                limited += 1;
                println!("trial {k}: step-limit steps={}", t.steps);
            }
        }
    }
    Ok(if limited > 0 { 2 } else { 0 })
}

pub fn distribution(a: &TrialArgs) -> Result<u8> {
    let (machine, input) = load(&a.run.machine)?;
    let w = width(&a.run, &input);
    let mut mass: BTreeMap<String, f64> = BTreeMap::new();
    let mut halted = 0usize;
    for k in 0..a.trials {
        let t = run_trial(&machine, &input, &a.run, a.run.machine.offset, k as u64)?;
        if t.status != RunStatus::Halted {
            continue;
        }
        halted += 1;
        let out = t.runtime.output_window(w)?;
        for (i, amp) in out.amplitudes().iter().enumerate() {
            let bits: String = (0..w).map(|q| if i >> (w - 1 - q) & 1 == 1 { '1' } else { '0' }).collect();
            *mass.entry(bits).or_default() += amp.norm_sqr();
        }
    }
    println!("seed: {}", a.run.seed);
    println!("halted: {halted}/{}", a.trials);
    for (bits, m) in mass {
        if m > 0.0 {
            println!("{bits} {:.6}", m / halted as f64);
        }
    }
    Ok(if halted < a.trials { 2 } else { 0 })
}

fn rational(p: f64) -> String {
    match as_dyadic(p) {
        Some((n, k)) => format!("{n}/{}", 1u64 << k),
        None => "not dyadic".into(),
    }
}

pub fn tree(a: &TreeArgs) -> Result<u8> {
    let (machine, input) = load(&a.machine)?;
    let limits = TreeLimits { max_depth: a.depth, min_path_probability: a.min_prob };
    let t = build_tree(machine, input, a.machine.offset, AncillaPolicy::Zero, limits)?;
    print!("{}", t.to_text());
    let (lo, hi) = termination_probability_bounds(&t);
    println!("bounds: {lo:.2} {hi:.2}");
    println!("lower: {lo:.12} {}", rational(lo));
    println!("upper: {hi:.12} {}", rational(hi));
    Ok(0)
}

pub fn compile(a: &CompileArgs) -> Result<u8> {
    let circuit = parse_circuit(&read(&a.source)?).map_err(|e| input_error(format!("{}: {e}", a.source.display())))?;
    emit(&write_machine(&compile_circuit(&circuit)), a.output.as_deref())?;
    Ok(0)
}

pub fn compile_tm(a: &CompileArgs) -> Result<u8> {
    let tm = parse_classical_tm(&read(&a.source)?).map_err(|e| input_error(format!("{}: {e}", a.source.display())))?;
    emit(&write_machine(&compile_classical_tm(&tm)?), a.output.as_deref())?;
    Ok(0)
}

pub fn verify_circuit(a: &VerifyCircuitArgs) -> Result<u8> {
    let circuit =
        parse_circuit(&read(&a.circuit)?).map_err(|e| input_error(format!("{}: {e}", a.circuit.display())))?;
    if a.trials == 0 {
        bail!("--trials must be positive");
    }
    let report = verify_compiled(&circuit, a.trials, a.max_steps, &mut trial_rng(a.seed, 0))?;
    let ok = report.passed(0.95);
    println!("seed: {}", a.seed);
    println!("states: {}", report.state_count);
    println!("halted: {}/{}", report.halted, report.trials);
    println!("mean steps: {:.1}", report.mean_steps);
    println!("min fidelity: {:.12}", report.min_fidelity);
    println!("failures: {}", report.failures);
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { 0 } else { 3 })
}
