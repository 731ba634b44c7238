//! Exact checks of the change-of-numéraire identities on a tree.

use num_rational::BigRational;
use num_traits::Zero;

use super::stopping::{Event, StoppingRule, TerminalFunctional};
use super::tree::{DualTree, Measure, NodeId};
use super::LatticeError;
use crate::extended::ExactValue;

fn finite(v: ExactValue, what: &str) -> Result<BigRational, LatticeError> {
    v.to_finite()
        .ok_or_else(|| LatticeError::InfinitePrice(format!("{what} is infinite")))
}

/// `Q€(A ∩ {1/X^tau_T > 0}) − E$[1_A X^tau_T] / x0`; zero on every valid tree.
pub fn verify_numeraire_identity(
    tree: &DualTree,
    event: &Event,
    tau: &StoppingRule,
) -> Result<BigRational, LatticeError> {
    event.check_measurable(tree, tau)?;
    let mut lhs = BigRational::zero();
    let mut rhs = ExactValue::Zero;
    for t in tree.terminals() {
        if !event.contains_path(tree, t.id) {
            continue;
        }
        let x = tau.stopped_state(tree, t.id);
        if !x.is_infinite() {
            lhs += tree.prob(Measure::Euro, t.id);
        }
        rhs = rhs + x.scale(tree.prob(Measure::Dollar, t.id));
    }
    let rhs = finite(rhs, "E$[1_A X^tau_T]")? / tree.x0();
    Ok(lhs - rhs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesResidual {
    pub node: NodeId,
    pub lhs: BigRational,
    pub rhs: BigRational,
}

impl BayesResidual {
    pub fn residual(&self) -> BigRational {
        &self.lhs - &self.rhs
    }
}

/// Both sides of the conditional Bayes formula at every stopping node of `rho`:
///
/// `E€[Y 1{1/X_tau > 0} / X_tau | F_rho] 1{X_rho > 0}`
/// versus `E$[Y 1{X_tau > 0} | F_rho] 1{1/X_rho > 0} / X_rho`.
pub fn bayes_check(
    tree: &DualTree,
    y: &TerminalFunctional,
    rho: &StoppingRule,
    tau: &StoppingRule,
) -> Result<Vec<BayesResidual>, LatticeError> {
    if !rho.le(tree, tau) {
        return Err(LatticeError::Measurability("rho must not exceed tau".into()));
    }
    y.check_measurable(tree, tau)?;
    let mut out = Vec::new();
    for node in rho.atoms(tree).into_keys() {
        let x_rho = &tree.node(node).x;
        let mut euro_side = ExactValue::Zero;
        for (t, w) in tree.terminal_weights(node, Measure::Euro) {
            let x_tau = tau.stopped_state(tree, t);
            let term = y.value(t).when(!x_tau.is_infinite()) * x_tau.recip();
            euro_side = euro_side + term.scale(&w);
        }
        let mut dollar_side = ExactValue::Zero;
        for (t, w) in tree.terminal_weights(node, Measure::Dollar) {
            let x_tau = tau.stopped_state(tree, t);
            dollar_side = dollar_side + y.value(t).when(!x_tau.is_zero()).scale(&w);
        }
        let lhs = euro_side.when(!x_rho.is_zero());
        let rhs = dollar_side.when(!x_rho.is_infinite()) * x_rho.recip();
        out.push(BayesResidual {
            node,
            lhs: finite(lhs, "Q€ side of the Bayes formula")?,
            rhs: finite(rhs, "Q$ side of the Bayes formula")?,
        });
    }
    Ok(out)
}

fn is_martingale(tree: &DualTree, m: Measure, value: impl Fn(NodeId) -> ExactValue) -> bool {
    for n in tree.interior() {
        if tree.prob(m, n.id).is_zero() {
            continue;
        }
        let here = value(n.id);
        if here.is_infinite() {
            return false;
        }
        let next: ExactValue = n
            .branches
            .iter()
            .map(|b| value(b.child).scale(b.mass(m)))
            .sum();
        if next != here {
            return false;
        }
    }
    true
}

/// `(N^tau 1{X^tau > 0} is a Q$-martingale, (N^tau 1{1/X^tau > 0}) / X^tau is a Q€-martingale)`.
/// The two answers always agree.
pub fn martingale_transfer_check(
    tree: &DualTree,
    process: &[ExactValue],
    tau: &StoppingRule,
) -> Result<(bool, bool), LatticeError> {
    if process.len() != tree.len() {
        return Err(LatticeError::Structure(format!(
            "process has {} values for {} nodes",
            process.len(),
            tree.len()
        )));
    }
    let dollar = is_martingale(tree, Measure::Dollar, |v| {
        let s = tau.stop_node(tree, v);
        process[s].when(!tree.node(s).x.is_zero())
    });
    let euro = is_martingale(tree, Measure::Euro, |v| {
        let s = tau.stop_node(tree, v);
        let x = &tree.node(s).x;
        process[s].when(!x.is_infinite()) * x.recip()
    });
    Ok((dollar, euro))
}
