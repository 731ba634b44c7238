use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::tree::{DualTree, Measure, NodeId};
use super::LatticeError;
use crate::extended::{rational_str, ExactValue, Extended};

/// A contingent claim on a tree: one `(dollar payoff, euro payoff)` pair per
/// terminal node, with `d_euro = d_dollar / x` wherever `x` is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeClaim {
    payoffs: BTreeMap<NodeId, (ExactValue, ExactValue)>,
}

impl TreeClaim {
    /// Builds a claim from explicit per-terminal pairs and checks consistency.
    pub fn new(
        tree: &DualTree,
        payoffs: BTreeMap<NodeId, (ExactValue, ExactValue)>,
    ) -> Result<Self, LatticeError> {
        for t in tree.terminals() {
            let Some((d_dollar, d_euro)) = payoffs.get(&t.id) else {
                return Err(LatticeError::InvalidClaim(format!(
                    "no payoff for terminal {:?}",
                    t.label
                )));
            };
            if t.x.is_interior() && *d_euro != d_dollar.clone() / t.x.clone() {
                return Err(LatticeError::InvalidClaim(format!(
                    "at terminal {:?}: euro payoff {d_euro} differs from {d_dollar} / {}",
                    t.label, t.x
                )));
            }
        }
        if payoffs.len() != tree.terminals().count() {
            return Err(LatticeError::InvalidClaim("payoff given for a non-terminal node".into()));
        }
        Ok(TreeClaim { payoffs })
    }

    /// Claim with payoffs `(f(X_T), g(X_T))`. The two functions must agree
    /// through `g(x) = f(x) / x` at finite states; at the absorbing states
    /// each side is its own limit.
    pub fn from_fns(
        tree: &DualTree,
        f: impl Fn(&ExactValue) -> ExactValue,
        g: impl Fn(&ExactValue) -> ExactValue,
    ) -> Self {
        let payoffs = tree.terminals().map(|t| (t.id, (f(&t.x), g(&t.x)))).collect();
        TreeClaim { payoffs }
    }

    pub fn zero(tree: &DualTree) -> Self {
        Self::from_fns(tree, |_| ExactValue::Zero, |_| ExactValue::Zero)
    }

    /// `(X_T, 1)`.
    pub fn euro_forward(tree: &DualTree) -> Self {
        Self::from_fns(tree, |x| x.clone(), |_| ExactValue::one())
    }

    /// `((X_T − K)^+, (1 − K/X_T)^+)`.
    pub fn call(tree: &DualTree, strike: &BigRational) -> Self {
        let one = BigRational::one();
        Self::from_fns(
            tree,
            |x| x.minus_floor(strike),
            |x| x.recip().scale(strike).floor_minus(&one),
        )
    }

    /// `((K − X_T)^+, (K/X_T − 1)^+)`.
    pub fn put(tree: &DualTree, strike: &BigRational) -> Self {
        let one = BigRational::one();
        Self::from_fns(
            tree,
            |x| x.floor_minus(strike),
            |x| x.recip().scale(strike).minus_floor(&one),
        )
    }

    /// Call on the Dollar struck in Euros: `((1 − K X_T)^+, (1/X_T − K)^+)`.
    pub fn dollar_call(tree: &DualTree, strike: &BigRational) -> Self {
        let one = BigRational::one();
        Self::from_fns(
            tree,
            |x| x.scale(strike).floor_minus(&one),
            |x| x.recip().minus_floor(strike),
        )
    }

    /// Put on the Dollar struck in Euros: `((K X_T − 1)^+, (K − 1/X_T)^+)`.
    pub fn dollar_put(tree: &DualTree, strike: &BigRational) -> Self {
        let one = BigRational::one();
        Self::from_fns(
            tree,
            |x| x.scale(strike).minus_floor(&one),
            |x| x.recip().floor_minus(strike),
        )
    }

    /// `(X_T (X_T − K)^+, (X_T − K)^+)`.
    pub fn self_quantoed(tree: &DualTree, strike: &BigRational) -> Self {
        Self::from_fns(
            tree,
            |x| x.clone() * x.minus_floor(strike),
            |x| x.minus_floor(strike),
        )
    }

    pub fn payoff(&self, terminal: NodeId) -> &(ExactValue, ExactValue) {
        &self.payoffs[&terminal]
    }

    pub fn payoffs(&self) -> &BTreeMap<NodeId, (ExactValue, ExactValue)> {
        &self.payoffs
    }

    /// `self + a · other`, component-wise.
    pub fn add_scaled(&self, other: &TreeClaim, a: &BigRational) -> TreeClaim {
        let payoffs = self
            .payoffs
            .iter()
            .map(|(id, (d, e))| {
                let (od, oe) = &other.payoffs[id];
                (*id, (d.clone() + od.scale(a), e.clone() + oe.scale(a)))
            })
            .collect();
        TreeClaim { payoffs }
    }
}

/// Exact decomposition of the minimal joint superreplication price.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactPrice {
    /// `E$[D$]`.
    #[serde(with = "rational_str")]
    pub classical: BigRational,
    /// `x0 · E€[D€ 1{X_T = ∞}]`.
    #[serde(with = "rational_str")]
    pub correction: BigRational,
    #[serde(with = "rational_str")]
    pub total_dollar: BigRational,
    #[serde(with = "rational_str")]
    pub total_euro: BigRational,
    /// `E€[D€] + E$[D$ 1{X_T = 0}] / x0`, computed on its own.
    #[serde(with = "rational_str")]
    pub euro_price: BigRational,
}

fn expect_finite(v: ExactValue, what: &str) -> Result<BigRational, LatticeError> {
    v.to_finite()
        .ok_or_else(|| LatticeError::InfinitePrice(format!("{what} has infinite mass")))
}

pub fn price_on_tree(tree: &DualTree, claim: &TreeClaim) -> Result<ExactPrice, LatticeError> {
    let x0 = tree.x0();
    let mut classical = ExactValue::Zero;
    let mut explosion = ExactValue::Zero;
    let mut euro = ExactValue::Zero;
    let mut devaluation = ExactValue::Zero;
    for t in tree.terminals() {
        let (d, e) = claim.payoff(t.id);
        let qd = tree.prob(Measure::Dollar, t.id);
        let qe = tree.prob(Measure::Euro, t.id);
        classical = classical + d.scale(qd);
        euro = euro + e.scale(qe);
        match t.x {
            Extended::Infinite => explosion = explosion + e.scale(qe),
            Extended::Zero => devaluation = devaluation + d.scale(qd),
            Extended::Finite(_) => {}
        }
    }
    let classical = expect_finite(classical, "E$[D$]")?;
    let correction = x0 * expect_finite(explosion, "E€[D€ on explosion]")?;
    let total_dollar = &classical + &correction;
    let total_euro = &total_dollar / x0;
    let euro_price = expect_finite(euro, "E€[D€]")?
        + expect_finite(devaluation, "E$[D$ on devaluation]")? / x0;
    Ok(ExactPrice {
        classical,
        correction,
        total_dollar,
        total_euro,
        euro_price,
    })
}

/// One strike of the parity and international equivalence report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityRow {
    #[serde(with = "rational_str")]
    pub strike: BigRational,
    #[serde(with = "rational_str")]
    pub call: BigRational,
    #[serde(with = "rational_str")]
    pub put: BigRational,
    /// `p(C_K) + K − p(P_K) − x0`.
    #[serde(with = "rational_str")]
    pub parity_residual: BigRational,
    /// `p$(C_K) − x0 K p€(dollar put at 1/K)`.
    #[serde(with = "rational_str")]
    pub intl_call_residual: BigRational,
    /// `p$(P_K) − x0 K p€(dollar call at 1/K)`.
    #[serde(with = "rational_str")]
    pub intl_put_residual: BigRational,
    /// Parity evaluated with `E$` alone.
    #[serde(with = "rational_str")]
    pub classical_violation: BigRational,
    /// `x0 · Q€(X_T = ∞)`.
    #[serde(with = "rational_str")]
    pub correction_mass: BigRational,
}

impl ParityRow {
    pub fn residuals_vanish(&self) -> bool {
        self.parity_residual.is_zero()
            && self.intl_call_residual.is_zero()
            && self.intl_put_residual.is_zero()
            && self.classical_violation == -&self.correction_mass
    }
}

pub fn parity_and_equivalence_report(
    tree: &DualTree,
    strikes: &[BigRational],
) -> Result<Vec<ParityRow>, LatticeError> {
    let x0 = tree.x0();
    let explosion_mass: BigRational = tree
        .terminals()
        .filter(|t| t.x.is_infinite())
        .map(|t| tree.prob(Measure::Euro, t.id).clone())
        .sum();
    let correction_mass = x0 * explosion_mass;
    let mut rows = Vec::with_capacity(strikes.len());
    for k in strikes {
        if *k <= BigRational::zero() {
            return Err(LatticeError::InvalidClaim(format!("strike {k} must be positive")));
        }
        let call = price_on_tree(tree, &TreeClaim::call(tree, k))?;
        let put = price_on_tree(tree, &TreeClaim::put(tree, k))?;
        let inv = BigRational::one() / k;
        let euro_put = price_on_tree(tree, &TreeClaim::dollar_put(tree, &inv))?;
        let euro_call = price_on_tree(tree, &TreeClaim::dollar_call(tree, &inv))?;
        let scale = x0 * k;
        rows.push(ParityRow {
            strike: k.clone(),
            parity_residual: &call.total_dollar + k - &put.total_dollar - x0,
            intl_call_residual: &call.total_dollar - &scale * &euro_put.euro_price,
            intl_put_residual: &put.total_dollar - &scale * &euro_call.euro_price,
            classical_violation: &call.classical + k - &put.classical - x0,
            correction_mass: correction_mass.clone(),
            call: call.total_dollar,
            put: put.total_dollar,
        });
    }
    Ok(rows)
}
