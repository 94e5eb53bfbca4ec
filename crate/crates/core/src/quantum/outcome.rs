use std::collections::VecDeque;

use rand::{Rng, RngCore};

use super::{QuantumError, Result, EIGENVALUE_MERGE_TOLERANCE};

/// Classical result of one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub observable_name: String,
    pub positions: Vec<usize>,
    pub outcome: f64,
    pub probability: f64,
}

impl MeasurementRecord {
    pub fn bit(&self) -> u8 {
        outcome_bit(self.outcome)
    }
}

/// Bit encoded by a ±1 outcome: `b = (1 - outcome) / 2`.
pub fn outcome_bit(outcome: f64) -> u8 {
    u8::from(outcome < 0.0)
}

/// Chooses which outcome a measurement produces.
///
/// `eigenvalues` and `probabilities` list the possible outcomes in descending
/// eigenvalue order; the return value indexes into them.
pub trait OutcomeSource {
    fn pick(&mut self, eigenvalues: &[f64], probabilities: &[f64]) -> Result<usize>;
}

/// Every random generator samples outcomes by the Born rule.
impl<R: RngCore> OutcomeSource for R {
    fn pick(&mut self, _eigenvalues: &[f64], probabilities: &[f64]) -> Result<usize> {
        let total: f64 = probabilities.iter().sum();
        let mut u = self.gen::<f64>() * total;
        for (k, p) in probabilities.iter().enumerate() {
            if u < *p {
                return Ok(k);
            }
            u -= p;
        }
        Ok(probabilities.len() - 1)
    }
}

/// Replays a fixed list of outcomes, failing if one is impossible.
#[derive(Debug, Clone, Default)]
pub struct ForcedOutcomes {
    queue: VecDeque<f64>,
}

impl ForcedOutcomes {
    pub fn new(outcomes: impl IntoIterator<Item = f64>) -> Self {
        ForcedOutcomes { queue: outcomes.into_iter().collect() }
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl OutcomeSource for ForcedOutcomes {
    fn pick(&mut self, eigenvalues: &[f64], _probabilities: &[f64]) -> Result<usize> {
        let wanted = self.queue.pop_front().ok_or(QuantumError::ForcedOutcome(f64::NAN))?;
        eigenvalues
            .iter()
            .position(|e| (e - wanted).abs() <= EIGENVALUE_MERGE_TOLERANCE)
            .ok_or(QuantumError::ForcedOutcome(wanted))
    }
}

/// Outcome source driven by [`enumerate_paths`]: it follows a prefix of
/// choices and takes the first branch beyond it, recording what it saw.
#[derive(Debug, Clone, Default)]
pub struct PathScript {
    choices: Vec<usize>,
    arities: Vec<usize>,
    outcomes: Vec<f64>,
    probability: f64,
}

impl PathScript {
    fn with_prefix(choices: Vec<usize>) -> Self {
        PathScript { choices, arities: Vec::new(), outcomes: Vec::new(), probability: 1.0 }
    }

    pub fn depth(&self) -> usize {
        self.arities.len()
    }

    /// Probability of the choices made so far.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }
}

impl OutcomeSource for PathScript {
    fn pick(&mut self, eigenvalues: &[f64], probabilities: &[f64]) -> Result<usize> {
        let d = self.arities.len();
        if d == self.choices.len() {
            self.choices.push(0);
        }
        let k = self.choices[d];
        self.arities.push(eigenvalues.len());
        self.outcomes.push(eigenvalues[k]);
        self.probability *= probabilities[k];
        Ok(k)
    }
}

/// One complete path found by [`enumerate_paths`].
#[derive(Debug, Clone)]
pub struct EnumeratedPath<T> {
    pub probability: f64,
    pub outcomes: Vec<f64>,
    pub value: T,
}

/// Runs `f` once for every outcome path of the measurements it performs.
///
/// `f` must be deterministic given the outcomes it receives from the script.
/// Paths are produced in lexicographic order of descending eigenvalues.
pub fn enumerate_paths<T, E, F>(mut f: F) -> std::result::Result<Vec<EnumeratedPath<T>>, E>
where
    F: FnMut(&mut PathScript) -> std::result::Result<T, E>,
{
    let mut paths = Vec::new();
    let mut prefix = Vec::new();
    loop {
        let mut script = PathScript::with_prefix(prefix);
        let value = f(&mut script)?;
        let PathScript { mut choices, arities, outcomes, probability } = script;
        paths.push(EnumeratedPath { probability, outcomes, value });

        choices.truncate(arities.len());
        let next = (0..choices.len()).rev().find(|&d| choices[d] + 1 < arities[d]);
        match next {
            Some(d) => {
                choices.truncate(d + 1);
                choices[d] += 1;
                prefix = choices;
            }
            None => return Ok(paths),
        }
    }
}
