//! Backward-induction superreplication with a money-market account and the
//! Euro as the only traded assets.
//!
//! Requirements are carried in each node's natural unit: Dollars at finite
//! and devaluation nodes, Euros at explosion nodes.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::pricing::TreeClaim;
use super::tree::{DualTree, Measure};
use super::LatticeError;
use crate::extended::{ExactValue, Extended};

/// Holdings and wealth of a self-financing strategy on a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStrategy {
    /// `(money-market units, Euro units)` held after rebalancing at each
    /// non-terminal node; `None` at terminals.
    pub holdings: Vec<Option<(BigRational, BigRational)>>,
    /// Wealth in Dollars; `None` where it would be negative, which only
    /// happens on branches carrying no mass under either measure.
    pub wealth_dollar: Vec<Option<ExactValue>>,
    pub wealth_euro: Vec<Option<ExactValue>>,
}

impl TreeStrategy {
    /// Terminal wealth dominates the claim wherever the node is charged by
    /// `Q$` (Dollar side) or `Q€` (Euro side) and lies in `support`.
    pub fn covers(&self, tree: &DualTree, claim: &TreeClaim, support: &[bool]) -> bool {
        tree.terminals().filter(|t| support[t.id]).all(|t| {
            let (d, e) = claim.payoff(t.id);
            let dollar_ok = tree.prob(Measure::Dollar, t.id).is_zero()
                || self.wealth_dollar[t.id].as_ref().is_some_and(|w| w >= d);
            let euro_ok = tree.prob(Measure::Euro, t.id).is_zero()
                || self.wealth_euro[t.id].as_ref().is_some_and(|w| w >= e);
            dollar_ok && euro_ok
        })
    }

    /// Checks the self-financing relations between every node and its children.
    pub fn is_self_financing(&self, tree: &DualTree) -> bool {
        for n in tree.interior() {
            let Some((eta0, eta1)) = &self.holdings[n.id] else {
                return false;
            };
            // rebalancing preserves wealth
            if let Extended::Finite(x) = &n.x {
                let before = self.wealth_dollar[n.id].clone();
                let after = signed(eta0 + eta1 * x);
                if before != after {
                    return false;
                }
            }
            for b in &n.branches {
                let c = tree.node(b.child);
                let (d, e) = split(natural_wealth(eta0, eta1, &c.x), &c.x);
                if self.wealth_dollar[c.id] != d || self.wealth_euro[c.id] != e {
                    return false;
                }
            }
        }
        true
    }
}

fn signed(v: BigRational) -> Option<ExactValue> {
    if v.is_negative() {
        None
    } else {
        Some(ExactValue::nonneg(v).expect("nonnegative"))
    }
}

/// Value of holdings `(eta0, eta1)` in state `x`, in that state's natural unit.
fn natural_wealth(eta0: &BigRational, eta1: &BigRational, x: &ExactValue) -> BigRational {
    match x {
        Extended::Finite(x) => eta0 + eta1 * x,
        Extended::Infinite => eta1.clone(),
        Extended::Zero => eta0.clone(),
    }
}

/// Dollar and Euro wealth from a natural-unit value.
fn split(w: BigRational, x: &ExactValue) -> (Option<ExactValue>, Option<ExactValue>) {
    match x {
        Extended::Finite(x) => {
            let e = &w / x;
            (signed(w), signed(e))
        }
        Extended::Infinite => {
            let e = signed(w);
            (e.clone().map(|v| v * ExactValue::Infinite), e)
        }
        Extended::Zero => {
            let d = signed(w);
            (d.clone(), d.map(|v| v * ExactValue::Infinite))
        }
    }
}

/// `a · eta0 + b · eta1 ≥ rhs`.
struct Constraint {
    a: BigRational,
    b: BigRational,
    rhs: BigRational,
}

impl Constraint {
    fn holds(&self, eta0: &BigRational, eta1: &BigRational) -> bool {
        &self.a * eta0 + &self.b * eta1 >= self.rhs
    }
}

/// Minimizes `eta0 + eta1 · x` over the constraints by enumerating vertices.
fn solve_step(
    x: &BigRational,
    constraints: &[Constraint],
    label: &str,
) -> Result<(BigRational, BigRational), LatticeError> {
    if constraints.is_empty() {
        return Ok((BigRational::zero(), BigRational::zero()));
    }
    let mut best: Option<(BigRational, BigRational, BigRational)> = None;
    for (i, ci) in constraints.iter().enumerate() {
        for cj in &constraints[i + 1..] {
            let det = &ci.a * &cj.b - &cj.a * &ci.b;
            if det.is_zero() {
                continue;
            }
            let eta0 = (&ci.rhs * &cj.b - &cj.rhs * &ci.b) / &det;
            let eta1 = (&ci.a * &cj.rhs - &cj.a * &ci.rhs) / &det;
            if !constraints.iter().all(|c| c.holds(&eta0, &eta1)) {
                continue;
            }
            let cost = &eta0 + &eta1 * x;
            if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
                best = Some((cost, eta0, eta1));
            }
        }
    }
    if let Some((_, eta0, eta1)) = best {
        return Ok((eta0, eta1));
    }
    // All normals parallel: every constrained child sits at the parent's
    // level, so holding Euros alone is optimal.
    if constraints.iter().all(|c| !c.a.is_zero() && c.b == &c.a * x) {
        let need = constraints
            .iter()
            .map(|c| &c.rhs / &c.a)
            .max()
            .expect("nonempty");
        return Ok((BigRational::zero(), need / x));
    }
    Err(LatticeError::Infeasible(label.to_string()))
}

/// Nodes charged by `Q$` or `Q€`.
pub fn mass_support(tree: &DualTree) -> Vec<bool> {
    tree.nodes()
        .iter()
        .map(|n| {
            !tree.prob(Measure::Dollar, n.id).is_zero() || !tree.prob(Measure::Euro, n.id).is_zero()
        })
        .collect()
}

/// Cheapest strategy whose terminal wealth dominates the claim under both
/// measures. Returns the price in Dollars.
pub fn superreplicate_backward(
    tree: &DualTree,
    claim: &TreeClaim,
) -> Result<(BigRational, TreeStrategy), LatticeError> {
    superreplicate_on_support(tree, claim, &mass_support(tree))
}

/// As [`superreplicate_backward`], but only nodes flagged in `support`
/// constrain the strategy.
pub fn superreplicate_on_support(
    tree: &DualTree,
    claim: &TreeClaim,
    support: &[bool],
) -> Result<(BigRational, TreeStrategy), LatticeError> {
    if support.len() != tree.len() {
        return Err(LatticeError::Structure(format!(
            "support mask has {} entries for {} nodes",
            support.len(),
            tree.len()
        )));
    }
    let n = tree.len();
    let mut required = vec![BigRational::zero(); n];
    let mut holdings: Vec<Option<(BigRational, BigRational)>> = vec![None; n];

    for t in tree.terminals() {
        if !support[t.id] {
            continue;
        }
        let (d, e) = claim.payoff(t.id);
        let natural = if t.x.is_infinite() { e } else { d };
        required[t.id] = natural.to_finite().ok_or_else(|| {
            LatticeError::InfinitePrice(format!("payoff at {:?} is infinite", t.label))
        })?;
    }

    // Children are stored after parents.
    for node in tree.nodes().iter().rev() {
        if node.branches.is_empty() {
            continue;
        }
        match &node.x {
            Extended::Finite(x) => {
                let constraints: Vec<Constraint> = node
                    .branches
                    .iter()
                    .filter(|b| support[b.child])
                    .map(|b| {
                        let rhs = required[b.child].clone();
                        match &tree.node(b.child).x {
                            Extended::Finite(xc) => Constraint {
                                a: BigRational::one(),
                                b: xc.clone(),
                                rhs,
                            },
                            Extended::Infinite => Constraint {
                                a: BigRational::zero(),
                                b: BigRational::one(),
                                rhs,
                            },
                            Extended::Zero => Constraint {
                                a: BigRational::one(),
                                b: BigRational::zero(),
                                rhs,
                            },
                        }
                    })
                    .collect();
                let (eta0, eta1) = solve_step(x, &constraints, &node.label)?;
                required[node.id] = &eta0 + &eta1 * x;
                holdings[node.id] = Some((eta0, eta1));
            }
            // absorbed: the single continuation carries the requirement
            _ => required[node.id] = required[node.branches[0].child].clone(),
        }
    }

    let price = required[tree.root()].clone();
    // wealth in each node's natural unit, possibly negative off the support
    let mut wealth = vec![BigRational::zero(); n];
    wealth[tree.root()] = price.clone();
    for node in tree.nodes() {
        if node.branches.is_empty() {
            continue;
        }
        let (eta0, eta1) = match &node.x {
            Extended::Finite(x) => {
                let (eta0, eta1) = holdings[node.id].clone().expect("solved at finite nodes");
                // surplus over the requirement goes into the money market
                let surplus = &wealth[node.id] - (&eta0 + &eta1 * x);
                (eta0 + surplus, eta1)
            }
            _ => node
                .parent
                .and_then(|p| holdings[p].clone())
                .expect("absorbed nodes have a finite ancestor"),
        };
        for b in &node.branches {
            wealth[b.child] = natural_wealth(&eta0, &eta1, &tree.node(b.child).x);
        }
        holdings[node.id] = Some((eta0, eta1));
    }

    let mut wealth_dollar = Vec::with_capacity(n);
    let mut wealth_euro = Vec::with_capacity(n);
    for (node, w) in tree.nodes().iter().zip(wealth) {
        let (d, e) = split(w, &node.x);
        wealth_dollar.push(d);
        wealth_euro.push(e);
    }

    Ok((
        price,
        TreeStrategy {
            holdings,
            wealth_dollar,
            wealth_euro,
        },
    ))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::extended::parse_rational;
    use crate::lattice::random::{claim_from_source, tree_from_source, ByteSource};
    use crate::lattice::{price_on_tree, two_period_tree, two_sided_tree};

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn genome(seed: u64) -> Vec<u8> {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        (0..400)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 24) as u8
            })
            .collect()
    }

    #[test]
    fn euro_forward_is_buy_and_hold() {
        let t = two_period_tree();
        let (price, strat) = superreplicate_backward(&t, &TreeClaim::euro_forward(&t)).unwrap();
        assert_eq!(price, r("1"));
        for n in t.interior() {
            assert_eq!(strat.holdings[n.id], Some((r("0"), r("1"))));
        }
        assert!(strat.is_self_financing(&t));
    }

    #[test]
    fn call_matches_formula() {
        let t = two_period_tree();
        let k = r("1/2");
        let claim = TreeClaim::call(&t, &k);
        let (price, strat) = superreplicate_backward(&t, &claim).unwrap();
        assert_eq!(price, r("3/4"));
        assert!(strat.covers(&t, &claim, &mass_support(&t)));
    }

    #[test]
    fn zero_claim_needs_nothing() {
        let t = two_period_tree();
        let (price, strat) = superreplicate_backward(&t, &TreeClaim::zero(&t)).unwrap();
        assert!(price.is_zero());
        for h in strat.holdings.iter().flatten() {
            assert!(h.0.is_zero() && h.1.is_zero());
        }
    }

    #[test]
    fn three_state_step_is_not_spanned() {
        // {∞, 1, 0} from x = 1: paying one Dollar at the middle state costs
        // one Dollar to superreplicate, while the pricing formula gives 1/2.
        let t = two_sided_tree();
        let m = t.find("m").unwrap();
        let payoffs: BTreeMap<_, _> = t
            .terminals()
            .map(|n| {
                let v = if n.id == m { ExactValue::one() } else { ExactValue::Zero };
                (n.id, (v.clone(), v))
            })
            .collect();
        let claim = TreeClaim::new(&t, payoffs).unwrap();
        let (price, strat) = superreplicate_backward(&t, &claim).unwrap();
        assert_eq!(price, r("1"));
        assert_eq!(price_on_tree(&t, &claim).unwrap().total_dollar, r("1/2"));
        assert!(strat.covers(&t, &claim, &mass_support(&t)));
    }

    #[test]
    fn formula_is_lower_bound_and_tight_on_complete_trees() {
        let mut complete = 0;
        for seed in 0..300 {
            let bytes = genome(seed);
            let mut src = ByteSource::new(&bytes);
            let t = tree_from_source(&mut src, 4);
            let claim = claim_from_source(&t, &mut src);
            let (price, strat) = superreplicate_backward(&t, &claim).unwrap();
            let formula = price_on_tree(&t, &claim).unwrap().total_dollar;
            assert!(strat.is_self_financing(&t));
            assert!(strat.covers(&t, &claim, &mass_support(&t)));
            assert!(price >= formula);
            if t.is_complete() {
                complete += 1;
                assert_eq!(price, formula, "seed {seed}");
            }
        }
        assert!(complete > 10);
    }
}
