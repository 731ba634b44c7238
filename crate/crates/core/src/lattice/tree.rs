use std::collections::{BTreeMap, VecDeque};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::LatticeError;
use crate::extended::{format_rational, ExactValue, Extended};

pub type NodeId = usize;

/// Which of the two pricing measures a computation runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    /// Risk-neutral measure of the Dollar investor, `Q$`.
    Dollar,
    /// Föllmer (change-of-numéraire) measure of the Euro investor, `Q€`.
    Euro,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub child: NodeId,
    pub q: BigRational,
    pub q_hat: BigRational,
}

impl Branch {
    pub fn mass(&self, m: Measure) -> &BigRational {
        match m {
            Measure::Dollar => &self.q,
            Measure::Euro => &self.q_hat,
        }
    }

    pub fn supported(&self) -> bool {
        !self.q.is_zero() || !self.q_hat.is_zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: NodeId,
    pub label: String,
    pub time_index: usize,
    pub x: ExactValue,
    pub parent: Option<NodeId>,
    pub branches: Vec<Branch>,
}

impl TreeNode {
    pub fn is_absorbing(&self) -> bool {
        !self.x.is_interior()
    }
}

/// A finite multi-period tree carrying the measure pair `(Q$, Q€)`.
///
/// Every branch satisfies the local density relation `q · x_child = q_hat · x_node`
/// on finite children, `q = 0` into explosion and `q_hat = 0` into devaluation.
/// Zero and infinity are absorbing.
#[derive(Debug, Clone)]
pub struct DualTree {
    periods: usize,
    x0: BigRational,
    nodes: Vec<TreeNode>,
    prob_dollar: Vec<BigRational>,
    prob_euro: Vec<BigRational>,
}

/// Serializable description of a tree: the modeler supplies `q_hat` on
/// nonzero children and `q` on devaluation children; `q` on finite children
/// is derived. The first node is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub nodes: Vec<NodeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub x: ExactValue,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<BranchSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_hat: Option<ExactValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<ExactValue>,
}

impl NodeSpec {
    pub fn new(id: impl Into<String>, x: ExactValue) -> Self {
        NodeSpec {
            id: id.into(),
            x,
            children: Vec::new(),
        }
    }

    /// Adds a nonzero child with its `Q€` transition mass.
    pub fn to_nonzero(mut self, to: impl Into<String>, q_hat: ExactValue) -> Self {
        self.children.push(BranchSpec {
            to: to.into(),
            q_hat: Some(q_hat),
            q: None,
        });
        self
    }

    /// Adds a devaluation child with its `Q$` transition mass.
    pub fn to_zero(mut self, to: impl Into<String>, q: ExactValue) -> Self {
        self.children.push(BranchSpec {
            to: to.into(),
            q_hat: None,
            q: Some(q),
        });
        self
    }
}

fn mass_of(v: &Option<ExactValue>, node: &str) -> Result<BigRational, LatticeError> {
    match v {
        None => Ok(BigRational::zero()),
        Some(Extended::Infinite) => Err(LatticeError::Structure(format!(
            "infinite transition mass on a branch of node {node:?}"
        ))),
        Some(m) => Ok(m.to_finite().unwrap_or_default()),
    }
}

impl DualTree {
    /// Builds and validates a tree from a `TreeSpec`.
    pub fn build(spec: &TreeSpec) -> Result<Self, LatticeError> {
        if spec.nodes.is_empty() {
            return Err(LatticeError::Structure("tree has no nodes".into()));
        }
        let mut index = BTreeMap::new();
        for (i, n) in spec.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return Err(LatticeError::Structure(format!("duplicate node id {:?}", n.id)));
            }
        }
        let root_spec = &spec.nodes[0];
        let x0 = match &root_spec.x {
            Extended::Finite(v) => v.clone(),
            _ => {
                return Err(LatticeError::Structure(
                    "root must carry a positive finite exchange rate".into(),
                ))
            }
        };

        // Breadth-first placement; every spec node must be reached exactly once.
        let mut nodes: Vec<TreeNode> = Vec::with_capacity(spec.nodes.len());
        let mut placed: Vec<Option<NodeId>> = vec![None; spec.nodes.len()];
        nodes.push(TreeNode {
            id: 0,
            label: root_spec.id.clone(),
            time_index: 0,
            x: root_spec.x.clone(),
            parent: None,
            branches: Vec::new(),
        });
        placed[0] = Some(0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(si) = queue.pop_front() {
            let ns = &spec.nodes[si];
            let me = placed[si].expect("queued nodes are placed");
            if !ns.x.is_interior() && !ns.children.is_empty() {
                return Err(LatticeError::Structure(format!(
                    "absorbing node {:?} (x = {}) must not list branches",
                    ns.id, ns.x
                )));
            }
            let x_node = ns.x.to_finite().unwrap_or_default();
            let mut branches = Vec::with_capacity(ns.children.len());
            for b in &ns.children {
                let ci = *index.get(b.to.as_str()).ok_or_else(|| {
                    LatticeError::Structure(format!("node {:?} references unknown child {:?}", ns.id, b.to))
                })?;
                if placed[ci].is_some() {
                    return Err(LatticeError::Structure(format!(
                        "node {:?} is reached twice; specs must describe a tree",
                        b.to
                    )));
                }
                let cs = &spec.nodes[ci];
                let (q, q_hat) = match &cs.x {
                    Extended::Zero => {
                        if b.q_hat.as_ref().is_some_and(|m| !m.is_zero()) {
                            return Err(LatticeError::Structure(format!(
                                "devaluation child {:?} must have q_hat = 0",
                                cs.id
                            )));
                        }
                        (mass_of(&b.q, &ns.id)?, BigRational::zero())
                    }
                    Extended::Infinite => {
                        if b.q.as_ref().is_some_and(|m| !m.is_zero()) {
                            return Err(LatticeError::Structure(format!(
                                "explosion child {:?} must have q = 0",
                                cs.id
                            )));
                        }
                        (BigRational::zero(), mass_of(&b.q_hat, &ns.id)?)
                    }
                    Extended::Finite(xc) => {
                        if b.q.is_some() {
                            return Err(LatticeError::Structure(format!(
                                "q on finite child {:?} is derived from q_hat and must not be given",
                                cs.id
                            )));
                        }
                        let q_hat = mass_of(&b.q_hat, &ns.id)?;
                        (&q_hat * &x_node / xc, q_hat)
                    }
                };
                let id = nodes.len();
                nodes.push(TreeNode {
                    id,
                    label: cs.id.clone(),
                    time_index: nodes[me].time_index + 1,
                    x: cs.x.clone(),
                    parent: Some(me),
                    branches: Vec::new(),
                });
                placed[ci] = Some(id);
                branches.push(Branch { child: id, q, q_hat });
                queue.push_back(ci);
            }
            if !branches.is_empty() {
                let sum_q: BigRational = branches.iter().map(|b| b.q.clone()).sum();
                let sum_hat: BigRational = branches.iter().map(|b| b.q_hat.clone()).sum();
                if !sum_hat.is_one() {
                    return Err(LatticeError::Normalization {
                        node: ns.id.clone(),
                        measure: "q_hat",
                        sum: format_rational(&sum_hat),
                    });
                }
                if !sum_q.is_one() {
                    return Err(LatticeError::Normalization {
                        node: ns.id.clone(),
                        measure: "q",
                        sum: format_rational(&sum_q),
                    });
                }
            }
            nodes[me].branches = branches;
        }
        if let Some(si) = placed.iter().position(Option::is_none) {
            return Err(LatticeError::Structure(format!(
                "node {:?} is not reachable from the root",
                spec.nodes[si].id
            )));
        }

        let periods = nodes.iter().map(|n| n.time_index).max().unwrap_or(0);
        if periods == 0 {
            return Err(LatticeError::Structure("tree needs at least one period".into()));
        }
        for n in &nodes {
            if n.branches.is_empty() && n.x.is_interior() && n.time_index < periods {
                return Err(LatticeError::Structure(format!(
                    "finite node {:?} has no branches before the horizon",
                    n.label
                )));
            }
        }
        // Absorbed states stay put: continue them with a probability-one
        // self-transition until the horizon.
        let leaves: Vec<NodeId> = nodes
            .iter()
            .filter(|n| n.branches.is_empty() && n.time_index < periods)
            .map(|n| n.id)
            .collect();
        for leaf in leaves {
            let mut cur = leaf;
            while nodes[cur].time_index < periods {
                let id = nodes.len();
                let t = nodes[cur].time_index + 1;
                let label = format!("{}@{}", nodes[leaf].label, t);
                let x = nodes[cur].x.clone();
                nodes.push(TreeNode {
                    id,
                    label,
                    time_index: t,
                    x,
                    parent: Some(cur),
                    branches: Vec::new(),
                });
                nodes[cur].branches.push(Branch {
                    child: id,
                    q: BigRational::one(),
                    q_hat: BigRational::one(),
                });
                cur = id;
            }
        }

        let mut tree = DualTree {
            periods,
            x0,
            nodes,
            prob_dollar: Vec::new(),
            prob_euro: Vec::new(),
        };
        tree.prob_dollar = tree.path_probabilities(Measure::Dollar);
        tree.prob_euro = tree.path_probabilities(Measure::Euro);
        Ok(tree)
    }

    fn path_probabilities(&self, m: Measure) -> Vec<BigRational> {
        let mut p = vec![BigRational::zero(); self.nodes.len()];
        p[0] = BigRational::one();
        // Nodes are stored parent-before-child.
        for n in &self.nodes {
            for b in &n.branches {
                p[b.child] = &p[n.id] * b.mass(m);
            }
        }
        p
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn x0(&self) -> &BigRational {
        &self.x0
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.label == label)
    }

    /// Unconditional probability of reaching `id`.
    pub fn prob(&self, m: Measure, id: NodeId) -> &BigRational {
        match m {
            Measure::Dollar => &self.prob_dollar[id],
            Measure::Euro => &self.prob_euro[id],
        }
    }

    pub fn terminals(&self) -> impl Iterator<Item = &TreeNode> + '_ {
        self.nodes.iter().filter(move |n| n.time_index == self.periods)
    }

    pub fn interior(&self) -> impl Iterator<Item = &TreeNode> + '_ {
        self.nodes.iter().filter(move |n| n.time_index < self.periods)
    }

    /// Path from the root down to `id`, inclusive.
    pub fn ancestry(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// True when `anc` lies on the root path of `id` (inclusive).
    pub fn is_ancestor(&self, anc: NodeId, id: NodeId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == anc {
                return true;
            }
            if self.nodes[c].time_index <= self.nodes[anc].time_index {
                return false;
            }
            cur = self.nodes[c].parent;
        }
        false
    }

    /// Terminal descendants of `from` with their probabilities conditional on
    /// reaching `from`, using local transition masses (defined even on null nodes).
    pub fn terminal_weights(&self, from: NodeId, m: Measure) -> Vec<(NodeId, BigRational)> {
        let mut out = Vec::new();
        let mut stack = vec![(from, BigRational::one())];
        while let Some((id, w)) = stack.pop() {
            let n = &self.nodes[id];
            if n.branches.is_empty() {
                out.push((id, w));
                continue;
            }
            for b in n.branches.iter().rev() {
                stack.push((b.child, &w * b.mass(m)));
            }
        }
        out
    }

    /// Recovers a `TreeSpec` that builds an identical tree (absorbing
    /// continuations are left implicit).
    pub fn to_spec(&self) -> TreeSpec {
        let mut nodes = Vec::new();
        for n in &self.nodes {
            if let Some(p) = n.parent {
                if !self.nodes[p].x.is_interior() {
                    continue;
                }
            }
            let mut ns = NodeSpec::new(n.label.clone(), n.x.clone());
            if n.x.is_interior() {
                for b in &n.branches {
                    let c = &self.nodes[b.child];
                    ns = if c.x.is_zero() {
                        ns.to_zero(c.label.clone(), ExactValue::nonneg(b.q.clone()).expect("q >= 0"))
                    } else {
                        ns.to_nonzero(
                            c.label.clone(),
                            ExactValue::nonneg(b.q_hat.clone()).expect("q_hat >= 0"),
                        )
                    };
                }
            }
            nodes.push(ns);
        }
        TreeSpec { nodes }
    }

    /// True when the money market and the Euro span every one-step market:
    /// each finite node has at most two charged branches, leading to
    /// different states.
    pub fn is_complete(&self) -> bool {
        self.nodes.iter().filter(|n| n.x.is_interior()).all(|n| {
            let states: Vec<&ExactValue> = n
                .branches
                .iter()
                .filter(|b| b.supported())
                .map(|b| &self.nodes[b.child].x)
                .collect();
            match states.as_slice() {
                [] | [_] => true,
                [a, b] => a != b,
                _ => false,
            }
        })
    }

    /// One-step supermartingale defects at interior finite nodes:
    /// `(node, x − E$[X_next], x · q_hat(explosion))` and the dual
    /// `(1/x − E€[1/X_next], (1/x) · q(devaluation))`.
    pub fn duality_defects(&self) -> Vec<DualityDefect> {
        let mut out = Vec::new();
        for n in self.interior().filter(|n| n.x.is_interior()) {
            let x = n.x.to_finite().expect("interior node");
            let mut mean_x = BigRational::zero();
            let mut mean_inv = BigRational::zero();
            let mut explosion = BigRational::zero();
            let mut devaluation = BigRational::zero();
            for b in &n.branches {
                match &self.nodes[b.child].x {
                    Extended::Finite(xc) => {
                        mean_x += &b.q * xc;
                        mean_inv += &b.q_hat / xc;
                    }
                    Extended::Infinite => explosion += &b.q_hat,
                    Extended::Zero => devaluation += &b.q,
                }
            }
            out.push(DualityDefect {
                node: n.id,
                dollar_defect: &x - mean_x,
                explosion_mass: &x * explosion,
                euro_defect: x.recip() - mean_inv,
                devaluation_mass: x.recip() * devaluation,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityDefect {
    pub node: NodeId,
    pub dollar_defect: BigRational,
    pub explosion_mass: BigRational,
    pub euro_defect: BigRational,
    pub devaluation_mass: BigRational,
}
