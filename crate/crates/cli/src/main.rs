//! `mqtm`: run, inspect, compile and verify measurement-only machines.
//!
//! Exit codes: 0 success or halt, 1 unreadable or malformed input, 2 step
//! limit reached, 3 runtime error or failed verification.

mod commands;
mod input;
mod protocol;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "mqtm", version, about = "Measurement-only quantum Turing machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a machine once and print its trace.
    Run(RunArgs),
    /// Run a machine repeatedly, one line per trial.
    Sample(TrialArgs),
    /// Born distribution of the output cells, averaged over trials.
    Distribution(TrialArgs),
    /// Enumerate the execution tree and bound the halting probability.
    Tree(TreeArgs),
    /// Compile a circuit file into a machine file.
    Compile(CompileArgs),
    /// Compile a circuit and check the machine against the circuit unitary.
    VerifyCircuit(VerifyCircuitArgs),
    /// Check one of the built-in measurement protocols.
    VerifyProtocol(VerifyProtocolArgs),
    /// Compile a classical Turing machine file into a machine file.
    CompileTm(CompileArgs),
}

#[derive(Args)]
struct MachineInput {
    /// Machine file.
    machine: PathBuf,
    /// Basis string over 0 1 + - or comma-separated amplitudes `re[:im]`.
    #[arg(long, default_value = "")]
    input: String,
    /// Cell of the input head's tape holding the first input qubit.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    offset: i64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Zero,
    Haar,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    machine: MachineInput,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = Policy::Zero)]
    policy: Policy,
    /// Output cells to report; defaults to the input size (at least one).
    #[arg(long)]
    width: Option<usize>,
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Args)]
struct TreeArgs {
    #[command(flatten)]
    machine: MachineInput,
    /// Transitions below the root.
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, default_value_t = 1e-6)]
    min_prob: f64,
}

#[derive(Args)]
struct CompileArgs {
    source: PathBuf,
    /// Write the machine here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyCircuitArgs {
    circuit: PathBuf,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 5000)]
    max_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ProtocolName {
    Transfer,
    BellPrep,
    Teleport,
    Write,
}

#[derive(Args)]
struct VerifyProtocolArgs {
    #[arg(value_enum)]
    name: ProtocolName,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Marks errors caused by unreadable or malformed input (exit code 1).
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(e: impl std::fmt::Display) -> anyhow::Error {
    InputError(e.to_string()).into()
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Distribution(a) => commands::distribution(&a),
        Command::Tree(a) => commands::tree(&a),
        Command::Compile(a) => commands::compile(&a),
        Command::VerifyCircuit(a) => commands::verify_circuit(&a),
        Command::VerifyProtocol(a) => protocol::verify(a.name, a.trials, a.seed),
        Command::CompileTm(a) => commands::compile_tm(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<InputError>() { 1 } else { 3 })
        }
    }
}
