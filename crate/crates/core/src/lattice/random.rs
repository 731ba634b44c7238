//! Byte-driven generators for random trees, claims and stopping rules.
//!
//! Every generator consumes bytes from a [`ByteSource`]; running out of bytes
//! yields zeros, so shorter inputs give simpler objects. This lets
//! property-testing frameworks shrink failures by shrinking byte vectors.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::pricing::TreeClaim;
use super::stopping::{Event, StoppingRule, TerminalFunctional};
use super::tree::{DualTree, NodeSpec, TreeSpec};
use crate::extended::{ExactValue, Extended};

pub struct ByteSource<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteSource<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteSource { bytes, pos: 0 }
    }

    pub fn next_u8(&mut self) -> u8 {
        let b = self.bytes.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    /// Uniform-ish choice in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.next_u8() as usize % n
    }

    /// A nonnegative rational with small numerator and denominator.
    pub fn rational(&mut self) -> BigRational {
        let num = self.below(8) as i64;
        let den = 1 + self.below(4) as i64;
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Node shapes as (finite children, explosion child, devaluation child).
const SHAPES: [(usize, bool, bool); 9] = [
    (1, false, false),
    (2, false, false),
    (3, false, false),
    (1, true, false),
    (1, false, true),
    (2, true, false),
    (2, false, true),
    (1, true, true),
    (0, true, true),
];

const EXPLOSION_MASSES: [(i64, i64); 5] = [(1, 5), (1, 4), (1, 3), (1, 2), (2, 3)];

struct Builder<'s, 'a> {
    src: &'s mut ByteSource<'a>,
    periods: usize,
    nodes: Vec<NodeSpec>,
}

impl Builder<'_, '_> {
    fn grow(&mut self, label: String, x: BigRational, t: usize) {
        let slot = self.nodes.len();
        self.nodes.push(NodeSpec::new(label.clone(), Extended::Finite(x.clone())));
        if t == self.periods {
            return;
        }
        let (finite, explode, devalue) = SHAPES[self.src.below(SHAPES.len())];

        let weights: Vec<i64> = (0..finite).map(|_| 1 + self.src.below(4) as i64).collect();
        let zero_weight = if devalue { 1 + self.src.below(4) as i64 } else { 0 };
        let total: i64 = weights.iter().sum::<i64>() + zero_weight;
        let h = if !explode {
            BigRational::zero()
        } else if finite == 0 {
            BigRational::one()
        } else {
            let (n, d) = EXPLOSION_MASSES[self.src.below(EXPLOSION_MASSES.len())];
            ratio(n, d)
        };

        // Finite levels x_i ∝ v_i, scaled so that Σ q_i x_i = x (1 − h).
        let q: Vec<BigRational> = weights.iter().map(|w| ratio(*w, total)).collect();
        // distinct levels, so that no two children share a state
        let mut levels: Vec<i64> = Vec::with_capacity(finite);
        for _ in 0..finite {
            let mut v = 1 + self.src.below(5) as i64;
            while levels.contains(&v) {
                v = v % 5 + 1;
            }
            levels.push(v);
        }
        let shape: Vec<BigRational> = levels.iter().map(|v| ratio(*v, 1)).collect();
        let norm: BigRational = q.iter().zip(&shape).map(|(qi, vi)| qi * vi).sum();

        let mut children = Vec::new();
        for (qi, vi) in q.iter().zip(&shape) {
            let xc = &x * (BigRational::one() - &h) * vi / &norm;
            let q_hat = qi * &xc / &x;
            children.push((format!("{label}.{}", children.len()), xc, q_hat));
        }
        let mut spec = NodeSpec::new(label.clone(), Extended::Finite(x));
        let mut pending = Vec::new();
        for (label, xc, q_hat) in children {
            spec = spec.to_nonzero(label.clone(), ExactValue::nonneg(q_hat).expect("positive"));
            pending.push((label, xc));
        }
        if explode {
            let label = format!("{label}e");
            spec = spec.to_nonzero(label.clone(), ExactValue::nonneg(h).expect("positive"));
            self.nodes.push(NodeSpec::new(label, Extended::Infinite));
        }
        if devalue {
            let label = format!("{label}z");
            spec = spec.to_zero(
                label.clone(),
                ExactValue::nonneg(ratio(zero_weight, total)).expect("positive"),
            );
            self.nodes.push(NodeSpec::new(label, Extended::Zero));
        }
        self.nodes[slot] = spec;
        for (label, xc) in pending {
            self.grow(label, xc, t + 1);
        }
    }
}

/// A random valid tree with `1..=max_periods` periods and at most three
/// branches per node.
pub fn tree_from_bytes(bytes: &[u8], max_periods: usize) -> DualTree {
    let mut src = ByteSource::new(bytes);
    tree_from_source(&mut src, max_periods)
}

pub fn tree_from_source(src: &mut ByteSource<'_>, max_periods: usize) -> DualTree {
    let periods = 1 + src.below(max_periods.max(1));
    let x0 = ratio(1 + src.below(4) as i64, 1 + src.below(3) as i64);
    let mut b = Builder {
        src,
        periods,
        nodes: Vec::new(),
    };
    b.grow("root".into(), x0, 0);
    DualTree::build(&TreeSpec { nodes: b.nodes }).expect("generated trees are valid")
}

/// Random nonnegative finite claim respecting `d_euro = d_dollar / x`.
pub fn claim_from_source(tree: &DualTree, src: &mut ByteSource<'_>) -> TreeClaim {
    let mut payoffs = BTreeMap::new();
    for t in tree.terminals() {
        let v = ExactValue::nonneg(src.rational()).expect("nonnegative");
        let pair = match &t.x {
            Extended::Infinite => (v.clone() * ExactValue::Infinite, v),
            Extended::Zero => (v.clone(), v * ExactValue::Infinite),
            Extended::Finite(_) => (v.clone(), v / t.x.clone()),
        };
        payoffs.insert(t.id, pair);
    }
    TreeClaim::new(tree, payoffs).expect("generated claims are consistent")
}

/// Random stopping rule: each node flagged with probability about 1/4.
pub fn stopping_rule_from_source(tree: &DualTree, src: &mut ByteSource<'_>) -> StoppingRule {
    let flagged: Vec<_> = tree
        .nodes()
        .iter()
        .filter(|_| src.below(4) == 0)
        .map(|n| n.id)
        .collect();
    StoppingRule::from_nodes(tree, flagged)
}

/// Random event measurable at `tau`: a random subset of its stopping nodes.
pub fn event_from_source(tree: &DualTree, tau: &StoppingRule, src: &mut ByteSource<'_>) -> Event {
    let atoms = tau.atoms(tree);
    Event::through(atoms.into_keys().filter(|_| src.below(2) == 0))
}

/// Random nonnegative functional measurable at `tau`.
pub fn functional_from_source(
    tree: &DualTree,
    tau: &StoppingRule,
    src: &mut ByteSource<'_>,
) -> TerminalFunctional {
    let values: BTreeMap<_, _> = tau
        .atoms(tree)
        .into_keys()
        .map(|s| (s, ExactValue::nonneg(src.rational()).expect("nonnegative")))
        .collect();
    TerminalFunctional::at_stop(tree, tau, |s| values[&s].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_genome_gives_one_period_degenerate_tree() {
        let t = tree_from_bytes(&[], 4);
        assert_eq!(t.periods(), 1);
        assert_eq!(t.len(), 2);
        assert!(t.is_complete());
    }

    #[test]
    fn generated_trees_respect_limits() {
        for seed in 0u8..=255 {
            let bytes: Vec<u8> = (0..200u32)
                .map(|i| seed.wrapping_mul(31).wrapping_add((i * 17 % 251) as u8))
                .collect();
            let t = tree_from_bytes(&bytes, 4);
            assert!(t.periods() <= 4);
            for n in t.nodes() {
                assert!(n.branches.len() <= 3);
            }
        }
    }
}
