//! Small hand-built trees used throughout the tests and by the CLI.

use super::tree::{DualTree, NodeSpec, TreeSpec};
use crate::extended::ExactValue;

fn v(s: &str) -> ExactValue {
    s.parse().expect("literal extended value")
}

/// Two periods from `x0 = 1`: each finite node explodes with `Q€`-mass 1/2 and
/// otherwise halves. Under `Q$` the path `1 → 1/2 → 1/4` is deterministic.
pub fn two_period_spec() -> TreeSpec {
    TreeSpec {
        nodes: vec![
            NodeSpec::new("root", v("1"))
                .to_nonzero("e", v("1/2"))
                .to_nonzero("a", v("1/2")),
            NodeSpec::new("e", v("inf")),
            NodeSpec::new("a", v("1/2"))
                .to_nonzero("ae", v("1/2"))
                .to_nonzero("aa", v("1/2")),
            NodeSpec::new("ae", v("inf")),
            NodeSpec::new("aa", v("1/4")),
        ],
    }
}

pub fn two_period_tree() -> DualTree {
    DualTree::build(&two_period_spec()).expect("two-period example is valid")
}

/// One period with devaluation only: `{0 (q = 1/4), 4/3 (q_hat = 1)}`.
pub fn devaluation_tree() -> DualTree {
    DualTree::build(&TreeSpec {
        nodes: vec![
            NodeSpec::new("root", v("1"))
                .to_zero("z", v("1/4"))
                .to_nonzero("u", v("1")),
            NodeSpec::new("z", v("0")),
            NodeSpec::new("u", v("4/3")),
        ],
    })
    .expect("devaluation example is valid")
}

/// One period with both absorbing events: `{∞ (q_hat = 1/2), 0 (q = 1/2), 1 (q_hat = 1/2)}`.
pub fn two_sided_tree() -> DualTree {
    DualTree::build(&TreeSpec {
        nodes: vec![
            NodeSpec::new("root", v("1"))
                .to_nonzero("e", v("1/2"))
                .to_zero("z", v("1/2"))
                .to_nonzero("m", v("1/2")),
            NodeSpec::new("e", v("inf")),
            NodeSpec::new("z", v("0")),
            NodeSpec::new("m", v("1")),
        ],
    })
    .expect("two-sided example is valid")
}

/// One child equal to its parent: `Q$ = Q€`.
pub fn degenerate_tree() -> DualTree {
    DualTree::build(&TreeSpec {
        nodes: vec![
            NodeSpec::new("root", v("1")).to_nonzero("a", v("1")),
            NodeSpec::new("a", v("1")),
        ],
    })
    .expect("degenerate example is valid")
}

/// Two-period binomial tree without absorption: `X` is a true martingale.
pub fn martingale_tree() -> DualTree {
    DualTree::build(&TreeSpec {
        nodes: vec![
            NodeSpec::new("root", v("1"))
                .to_nonzero("u", v("2/3"))
                .to_nonzero("d", v("1/3")),
            NodeSpec::new("u", v("2"))
                .to_nonzero("uu", v("3/4"))
                .to_nonzero("ud", v("1/4")),
            NodeSpec::new("d", v("1/2"))
                .to_nonzero("du", v("2/3"))
                .to_nonzero("dd", v("1/3")),
            NodeSpec::new("uu", v("3")),
            NodeSpec::new("ud", v("1")),
            NodeSpec::new("du", v("1")),
            NodeSpec::new("dd", v("1/4")),
        ],
    })
    .expect("martingale example is valid")
}
