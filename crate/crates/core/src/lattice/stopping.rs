use std::collections::{BTreeMap, BTreeSet};

use super::tree::{DualTree, NodeId};
use super::LatticeError;
use crate::extended::ExactValue;

/// A bounded stopping rule, encoded as a set of flagged nodes. Along each path
/// the rule stops at the first flagged node, or at the horizon if none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingRule {
    flags: Vec<bool>,
}

impl StoppingRule {
    /// Stops at the horizon `T`.
    pub fn terminal(tree: &DualTree) -> Self {
        StoppingRule {
            flags: vec![false; tree.len()],
        }
    }

    /// Deterministic time `t` (clamped to the horizon).
    pub fn at_time(tree: &DualTree, t: usize) -> Self {
        StoppingRule {
            flags: tree.nodes().iter().map(|n| n.time_index == t).collect(),
        }
    }

    pub fn from_nodes(tree: &DualTree, nodes: impl IntoIterator<Item = NodeId>) -> Self {
        let mut flags = vec![false; tree.len()];
        for id in nodes {
            flags[id] = true;
        }
        StoppingRule { flags }
    }

    /// First time the state satisfies `hit`.
    pub fn hitting(tree: &DualTree, hit: impl Fn(&ExactValue) -> bool) -> Self {
        StoppingRule {
            flags: tree.nodes().iter().map(|n| hit(&n.x)).collect(),
        }
    }

    /// `self ∧ other`.
    pub fn min(&self, other: &Self) -> Self {
        StoppingRule {
            flags: self.flags.iter().zip(&other.flags).map(|(a, b)| *a || *b).collect(),
        }
    }

    pub fn is_flagged(&self, id: NodeId) -> bool {
        self.flags[id]
    }

    /// The node at which a path through `id` has stopped, given that it has
    /// reached `id`: the first flagged node on the root path, else `id` itself.
    pub fn stop_node(&self, tree: &DualTree, id: NodeId) -> NodeId {
        tree.ancestry(id)
            .into_iter()
            .find(|&a| self.flags[a])
            .unwrap_or(id)
    }

    /// `X^tau` sampled at the horizon along the path ending at `terminal`.
    pub fn stopped_state<'t>(&self, tree: &'t DualTree, terminal: NodeId) -> &'t ExactValue {
        &tree.node(self.stop_node(tree, terminal)).x
    }

    /// Pathwise `self ≤ other`.
    pub fn le(&self, tree: &DualTree, other: &Self) -> bool {
        tree.terminals().all(|t| {
            let a = self.stop_node(tree, t.id);
            let b = other.stop_node(tree, t.id);
            tree.node(a).time_index <= tree.node(b).time_index
        })
    }

    /// Atoms of `F_tau`: each terminal mapped to its stop node.
    pub fn atoms(&self, tree: &DualTree) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut atoms: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for t in tree.terminals() {
            atoms.entry(self.stop_node(tree, t.id)).or_default().push(t.id);
        }
        atoms
    }
}

/// An event given by a set of nodes: a path belongs to it when it passes
/// through any of them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Event {
    nodes: BTreeSet<NodeId>,
}

impl Event {
    pub fn empty() -> Self {
        Event::default()
    }

    pub fn everything(tree: &DualTree) -> Self {
        Event {
            nodes: BTreeSet::from([tree.root()]),
        }
    }

    pub fn through(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        Event {
            nodes: nodes.into_iter().collect(),
        }
    }

    pub fn contains_path(&self, tree: &DualTree, terminal: NodeId) -> bool {
        tree.ancestry(terminal).iter().any(|a| self.nodes.contains(a))
    }

    /// Checks that membership is constant on every atom of `F_tau`.
    pub fn check_measurable(&self, tree: &DualTree, tau: &StoppingRule) -> Result<(), LatticeError> {
        for (stop, members) in tau.atoms(tree) {
            let first = self.contains_path(tree, members[0]);
            if members.iter().any(|&m| self.contains_path(tree, m) != first) {
                return Err(LatticeError::Measurability(format!(
                    "event splits the paths through stopping node {:?}",
                    tree.node(stop).label
                )));
            }
        }
        Ok(())
    }
}

/// A nonnegative random variable given by its value on each terminal path.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalFunctional {
    values: BTreeMap<NodeId, ExactValue>,
}

impl TerminalFunctional {
    pub fn from_fn(tree: &DualTree, f: impl Fn(NodeId) -> ExactValue) -> Self {
        TerminalFunctional {
            values: tree.terminals().map(|t| (t.id, f(t.id))).collect(),
        }
    }

    pub fn constant(tree: &DualTree, c: ExactValue) -> Self {
        Self::from_fn(tree, |_| c.clone())
    }

    /// `f` evaluated at the stop node of `tau`, which makes it measurable by construction.
    pub fn at_stop(tree: &DualTree, tau: &StoppingRule, f: impl Fn(NodeId) -> ExactValue) -> Self {
        Self::from_fn(tree, |t| f(tau.stop_node(tree, t)))
    }

    /// `X` stopped at `tau`.
    pub fn stopped_state(tree: &DualTree, tau: &StoppingRule) -> Self {
        Self::at_stop(tree, tau, |n| tree.node(n).x.clone())
    }

    pub fn value(&self, terminal: NodeId) -> &ExactValue {
        &self.values[&terminal]
    }

    pub fn check_measurable(&self, tree: &DualTree, tau: &StoppingRule) -> Result<(), LatticeError> {
        for (stop, members) in tau.atoms(tree) {
            let first = self.value(members[0]);
            if members.iter().any(|m| self.value(*m) != first) {
                return Err(LatticeError::Measurability(format!(
                    "functional varies within the atom of stopping node {:?}",
                    tree.node(stop).label
                )));
            }
        }
        Ok(())
    }
}
