//! Exact finite-state realization of the measure pair `(Q$, Q€)`.
//!
//! All arithmetic is over [`num_rational::BigRational`], so every identity
//! checked here holds with a residual of exactly zero. On a finite tree the
//! exchange rate cannot be a strict local martingale; instead it is a strict
//! `Q$`-supermartingale exactly when some branch leads to explosion, and the
//! one-step defect equals the explosion mass that only `Q€` sees.

mod examples;
mod identities;
mod pricing;
pub mod random;
mod stopping;
mod superrep;
mod tree;

use thiserror::Error;

pub use examples::{
    degenerate_tree, devaluation_tree, martingale_tree, two_period_spec, two_period_tree,
    two_sided_tree,
};
pub use identities::{bayes_check, martingale_transfer_check, verify_numeraire_identity, BayesResidual};
pub use pricing::{parity_and_equivalence_report, price_on_tree, ExactPrice, ParityRow, TreeClaim};
pub use stopping::{Event, StoppingRule, TerminalFunctional};
pub use superrep::{mass_support, superreplicate_backward, superreplicate_on_support, TreeStrategy};
pub use tree::{
    Branch, BranchSpec, DualTree, DualityDefect, Measure, NodeId, NodeSpec, TreeNode, TreeSpec,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("transition masses {measure} at node {node:?} sum to {sum}, expected 1")]
    Normalization {
        node: String,
        measure: &'static str,
        sum: String,
    },
    #[error("invalid tree structure: {0}")]
    Structure(String),
    #[error("not measurable: {0}")]
    Measurability(String),
    #[error("infinite price: {0}")]
    InfinitePrice(String),
    #[error("invalid claim: {0}")]
    InvalidClaim(String),
    #[error("cannot condition on a null event: {0}")]
    Conditioning(String),
    #[error("superreplication LP infeasible at node {0}")]
    Infeasible(String),
}
