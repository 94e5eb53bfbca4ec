//! Execution trees: every outcome branch of a machine run, expanded
//! breadth-first with exact register states and path probabilities.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::machine::{AncillaPolicy, Configuration, MachineError, MachineSpec, Runtime, StepRecord};
use crate::quantum::{outcome_distribution, MeasurementRecord, OutcomeSource, QuantumError, StateVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("execution trees need the zero ancilla policy")]
    NondeterministicPolicy,
    #[error("tree limits must be positive")]
    BadLimits,
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeLimits {
    /// Number of transitions below the root.
    pub max_depth: usize,
    pub min_path_probability: f64,
}

impl Default for TreeLimits {
    fn default() -> Self {
        TreeLimits { max_depth: 8, min_path_probability: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub config: Configuration,
    /// Observable of the transition leaving this node, if any.
    pub observable: Option<String>,
    /// Outcomes from the root to this node.
    pub path: Vec<f64>,
    pub edge_probability: f64,
    pub path_probability: f64,
    pub halted: bool,
    /// Not halted and not expanded because of the limits.
    pub truncated: bool,
    pub children: Vec<usize>,
    runtime: Runtime,
}

impl TreeNode {
    pub fn runtime(&self) -> &Runtime {
        &self.runtime
    }

    pub fn register(&self) -> &StateVector {
        self.runtime.register()
    }
}

/// Nodes in breadth-first order; children of a node are ordered by
/// descending eigenvalue.
#[derive(Debug, Clone)]
pub struct ExecutionTree {
    pub nodes: Vec<TreeNode>,
    pub limits: TreeLimits,
}

impl ExecutionTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &TreeNode> {
        self.nodes[id].children.iter().map(|&c| &self.nodes[c])
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn max_children(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).max().unwrap_or(0)
    }

    pub fn halted_leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.halted)
    }

    pub fn frontier(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.truncated)
    }

    /// Mass of the nodes at depth `d` plus halted nodes above it.
    pub fn mass_at_depth(&self, d: usize) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.depth == d || (n.depth < d && (n.halted || n.truncated)))
            .map(|n| n.path_probability)
            .sum()
    }

    /// One line per node: depth, configuration, observable, outcome path,
    /// path probability and status.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let path: Vec<String> = n.path.iter().map(|o| format!("{o:+}")).collect();
            let status = if n.halted {
                "halted"
            } else if n.truncated {
                "truncated"
            } else {
                "open"
            };
            let _ = writeln!(
                out,
                "{}{} {} obs={} path=[{}] p={:.12} {}",
                "  ".repeat(n.depth),
                n.depth,
                n.config,
                n.observable.as_deref().unwrap_or("-"),
                path.join(","),
                n.path_probability,
                status
            );
        }
        out
    }
}

fn next_observable(rt: &Runtime) -> Option<String> {
    let c = rt.config();
    rt.machine().transition(&c.state, &c.last_outcome).map(|t| t.observable.clone())
}

pub fn build_tree(
    machine: impl Into<Arc<MachineSpec>>,
    input: StateVector,
    input_offset: i64,
    policy: AncillaPolicy,
    limits: TreeLimits,
) -> Result<ExecutionTree, TreeError> {
    if policy != AncillaPolicy::Zero {
        return Err(TreeError::NondeterministicPolicy);
    }
    if limits.max_depth == 0 || !(limits.min_path_probability >= 0.0) {
        return Err(TreeError::BadLimits);
    }
    let root = Runtime::new(machine, input, input_offset, policy)?;
    let mut nodes = vec![TreeNode {
        id: 0,
        parent: None,
        depth: 0,
        config: root.config().clone(),
        observable: next_observable(&root),
        path: Vec::new(),
        edge_probability: 1.0,
        path_probability: 1.0,
        halted: false,
        truncated: false,
        children: Vec::new(),
        runtime: root,
    }];
    let mut k = 0;
    while k < nodes.len() {
        let mut rt = nodes[k].runtime.clone();
        let Some(pending) = rt.prepare()? else {
            nodes[k].halted = true;
            k += 1;
            continue;
        };
        if nodes[k].depth >= limits.max_depth || nodes[k].path_probability < limits.min_path_probability {
            nodes[k].truncated = true;
            k += 1;
            continue;
        }
        let entries = outcome_distribution(rt.register(), &pending.observable, &pending.positions)?;
        for e in entries {
            let record = MeasurementRecord {
                observable_name: pending.observable.name().to_string(),
                positions: pending.positions.clone(),
                outcome: e.eigenvalue,
                probability: e.probability,
            };
            let mut child = rt.clone();
            child.commit(pending.clone(), record, e.state);
            let id = nodes.len();
            let parent = &nodes[k];
            let mut path = parent.path.clone();
            path.push(e.eigenvalue);
            let node = TreeNode {
                id,
                parent: Some(k),
                depth: parent.depth + 1,
                config: child.config().clone(),
                observable: next_observable(&child),
                path,
                edge_probability: e.probability,
                path_probability: parent.path_probability * e.probability,
                halted: false,
                truncated: false,
                children: Vec::new(),
                runtime: child,
            };
            nodes[k].children.push(id);
            nodes.push(node);
        }
        k += 1;
    }
    Ok(ExecutionTree { nodes, limits })
}

/// `(lower, upper)` bounds on the halting probability: halted leaves, plus
/// the truncated frontier for the upper bound.
pub fn termination_probability_bounds(tree: &ExecutionTree) -> (f64, f64) {
    let lower: f64 = tree.halted_leaves().map(|n| n.path_probability).sum();
    let open: f64 = tree.frontier().map(|n| n.path_probability).sum();
    (lower.min(1.0), (lower + open).min(1.0))
}

/// One sampled run under the zero ancilla policy; the records of the path.
pub fn sample_path<S: OutcomeSource + ?Sized>(
    machine: impl Into<Arc<MachineSpec>>,
    input: StateVector,
    input_offset: i64,
    source: &mut S,
    max_steps: usize,
) -> Result<Vec<StepRecord>, TreeError> {
    let mut rt = Runtime::new(machine, input, input_offset, AncillaPolicy::Zero)?;
    rt.run(source, max_steps)?;
    Ok(rt.trace().to_vec())
}

/// `p = n / 2^k` in lowest terms with `k <= 30`, if `p` is that dyadic
/// rational within `1e-12`.
pub fn as_dyadic(p: f64) -> Option<(u64, u32)> {
    for k in 0..=30u32 {
        let scale = 2f64.powi(k as i32);
        let n = (p * scale).round();
        if n >= 0.0 && (p - n / scale).abs() < 1e-12 {
            let (mut n, mut k) = (n as u64, k);
            while k > 0 && n % 2 == 0 {
                n /= 2;
                k -= 1;
            }
            return Some((n, k));
        }
    }
    None
}
