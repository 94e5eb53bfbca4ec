//! Breadth-first exploration of all outcome branches of a measurement controller.

use rustc_hash::{FxHashMap, FxHasher};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{outcome_distribution, Observable, Result, StateVector, C64};

/// What a controller does next in a given classical state.
#[derive(Debug, Clone)]
pub enum ControlAction {
    Measure { observable: Arc<Observable>, positions: Vec<usize> },
    Halt,
}

/// A classical control loop whose only quantum action is measurement.
pub trait Controller {
    type State: Clone + Eq + Hash;

    fn action(&self, state: &Self::State) -> ControlAction;

    fn advance(&self, state: &Self::State, outcome: f64) -> Self::State;
}

/// A weighted branch: classical control state plus register state.
#[derive(Debug, Clone)]
pub struct Branch<S> {
    pub control: S,
    pub state: StateVector,
    pub probability: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ExploreLimits {
    pub max_steps: usize,
    /// Branches below this probability are dropped and counted as residual mass.
    pub min_probability: f64,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits { max_steps: 64, min_probability: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Exploration<S> {
    pub halted: Vec<Branch<S>>,
    /// Branches still running when `max_steps` was reached.
    pub frontier: Vec<Branch<S>>,
    /// Probability mass discarded by `min_probability`.
    pub dropped: f64,
}

impl<S> Exploration<S> {
    pub fn halted_mass(&self) -> f64 {
        self.halted.iter().map(|b| b.probability).sum()
    }

    pub fn frontier_mass(&self) -> f64 {
        self.frontier.iter().map(|b| b.probability).sum()
    }
}

/// Hashable fingerprint of a state up to global phase.
///
/// The phase is fixed by making the first amplitude of (near-)maximal modulus
/// real and positive; components are then quantized to 1e-6. Only entries
/// that do not quantize to zero are listed, as `(index, re, im)`.
pub fn state_key(state: &StateVector) -> Vec<i64> {
    let amps = state.amplitudes();
    let max = amps.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max).sqrt();
    // |a| >= max - 1e-9, compared on squares.
    let floor = (max - 1e-9).max(0.0).powi(2);
    let pivot = amps.iter().position(|a| a.norm_sqr() >= floor).unwrap_or(0);
    let phase = if max > 0.0 { amps[pivot].conj() / amps[pivot].norm() } else { C64::new(1.0, 0.0) };
    // Round half away from zero; the cast truncates.
    let q = |x: f64| (x * 1e6 + 0.5f64.copysign(x)) as i64;
    let mut key = Vec::with_capacity(3 * amps.len());
    for (i, a) in amps.iter().enumerate() {
        if a.norm_sqr() < 1e-14 {
            continue;
        }
        let z = a * phase;
        let (re, im) = (q(z.re), q(z.im));
        if re != 0 || im != 0 {
            key.extend([i as i64, re, im]);
        }
    }
    key
}

/// Branches merged on (control state, [`state_key`]).
struct Pool<S> {
    branches: Vec<Branch<S>>,
    keys: Vec<Vec<i64>>,
    /// Hash of the merge key to the latest branch with that hash; older
    /// collisions are chained through `chain`.
    heads: FxHashMap<u64, usize>,
    chain: Vec<usize>,
}

impl<S: Eq + Hash> Pool<S> {
    fn new() -> Self {
        Pool { branches: Vec::new(), keys: Vec::new(), heads: FxHashMap::default(), chain: Vec::new() }
    }

    fn merge(&mut self, branch: Branch<S>) {
        let key = state_key(&branch.state);
        let mut hasher = FxHasher::default();
        branch.control.hash(&mut hasher);
        key.hash(&mut hasher);
        let hash = hasher.finish();
        let mut at = self.heads.get(&hash).copied().unwrap_or(usize::MAX);
        while at != usize::MAX {
            if self.branches[at].control == branch.control && self.keys[at] == key {
                let b = &mut self.branches[at];
                b.probability += branch.probability;
                b.steps = b.steps.min(branch.steps);
                return;
            }
            at = self.chain[at];
        }
        let k = self.branches.len();
        self.chain.push(self.heads.insert(hash, k).unwrap_or(usize::MAX));
        self.keys.push(key);
        self.branches.push(branch);
    }
}

/// Explores every outcome branch of `controller`, merging branches that reach
/// the same control state with the same register state (up to phase).
pub fn explore<C: Controller>(
    controller: &C,
    control: C::State,
    state: StateVector,
    limits: ExploreLimits,
) -> Result<Exploration<C::State>> {
    let mut frontier = vec![Branch { control, state, probability: 1.0, steps: 0 }];
    let mut halted = Pool::new();
    let mut dropped = 0.0;

    for _ in 0..=limits.max_steps {
        let mut next = Pool::new();
        for branch in frontier.drain(..) {
            match controller.action(&branch.control) {
                ControlAction::Halt => halted.merge(branch),
                ControlAction::Measure { .. } if branch.steps == limits.max_steps => {
                    next.merge(branch);
                }
                ControlAction::Measure { observable, positions } => {
                    for entry in outcome_distribution(&branch.state, &observable, &positions)? {
                        let probability = branch.probability * entry.probability;
                        if probability < limits.min_probability {
                            dropped += probability;
                            continue;
                        }
                        let child = Branch {
                            control: controller.advance(&branch.control, entry.eigenvalue),
                            state: entry.state,
                            probability,
                            steps: branch.steps + 1,
                        };
                        next.merge(child);
                    }
                }
            }
        }
        frontier = next.branches;
        let running = frontier.iter().any(|b| b.steps < limits.max_steps);
        if !running {
            break;
        }
    }

    let (mut done, running): (Vec<_>, Vec<_>) =
        frontier.into_iter().partition(|b| matches!(controller.action(&b.control), ControlAction::Halt));
    for b in done.drain(..) {
        halted.merge(b);
    }
    Ok(Exploration { halted: halted.branches, frontier: running, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::shared_observable;

    /// Repeat (X, Z) on qubit 0 until Z reads +1.
    struct WriteZero;

    impl Controller for WriteZero {
        type State = u8;

        fn action(&self, state: &u8) -> ControlAction {
            let name = match state {
                0 => "X",
                1 => "Z",
                _ => return ControlAction::Halt,
            };
            ControlAction::Measure { observable: shared_observable(name).unwrap(), positions: vec![0] }
        }

        fn advance(&self, state: &u8, outcome: f64) -> u8 {
            match (state, outcome > 0.0) {
                (0, _) => 1,
                (_, true) => 2,
                _ => 0,
            }
        }
    }

    #[test]
    fn merges_equivalent_branches() {
        let ex =
            explore(&WriteZero, 0, StateVector::basis(1, 1), ExploreLimits { max_steps: 20, min_probability: 0.0 })
                .unwrap();
        assert_eq!(ex.halted.len(), 1);
        assert!((ex.halted_mass() - (1.0 - 2f64.powi(-10))).abs() < 1e-12);
        assert!((ex.halted_mass() + ex.frontier_mass() - 1.0).abs() < 1e-12);
        assert!(ex.frontier.len() <= 2);
    }

    #[test]
    fn key_ignores_global_phase() {
        let a = StateVector::qubit(C64::new(1.0, 0.0), C64::new(0.0, 1.0)).unwrap();
        let b = StateVector::qubit(C64::new(0.0, 1.0), C64::new(-1.0, 0.0)).unwrap();
        assert_eq!(state_key(&a), state_key(&b));
        let c = StateVector::qubit(C64::new(1.0, 0.0), C64::new(0.0, -1.0)).unwrap();
        assert_ne!(state_key(&a), state_key(&c));
    }
}
