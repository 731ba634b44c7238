//! A physical measure under which both currencies can collapse.
//!
//! `P` is the even mixture of `Q$` and `Q€` on a tree. Conditioning `P` on
//! "no explosion" and on "no devaluation" recovers measures equivalent to
//! `Q$` and `Q€`, so both hyperinflation events are visible at once.

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::extended::{rational_str, Extended};
use crate::lattice::{
    price_on_tree, superreplicate_on_support, DualTree, LatticeError, Measure, TreeClaim,
};

#[derive(Debug, Clone)]
pub struct PhysicalLattice {
    tree: DualTree,
    /// `P` of reaching each node.
    p: Vec<BigRational>,
    /// `P(· | X_T ≠ ∞)` of reaching each node.
    p_dollar: Vec<BigRational>,
    /// `P(· | X_T ≠ 0)` of reaching each node.
    p_euro: Vec<BigRational>,
}

/// Sums terminal masses up to every ancestor.
fn node_masses(tree: &DualTree, terminal: impl Fn(usize) -> BigRational) -> Vec<BigRational> {
    let mut m = vec![BigRational::zero(); tree.len()];
    for t in tree.terminals() {
        m[t.id] = terminal(t.id);
    }
    for n in tree.nodes().iter().rev() {
        if let Some(p) = n.parent {
            let add = m[n.id].clone();
            m[p] += add;
        }
    }
    m
}

pub fn build_physical(tree: &DualTree) -> Result<PhysicalLattice, LatticeError> {
    let half = BigRational::new(1.into(), 2.into());
    let mixed = |id: usize| {
        (tree.prob(Measure::Dollar, id) + tree.prob(Measure::Euro, id)) * &half
    };
    let p = node_masses(tree, mixed);

    let condition = |keep: &dyn Fn(&Extended<BigRational>) -> bool, what: &str| {
        let mass: BigRational = tree
            .terminals()
            .filter(|t| keep(&t.x))
            .map(|t| mixed(t.id))
            .sum();
        if mass.is_zero() {
            return Err(LatticeError::Conditioning(what.to_string()));
        }
        Ok(node_masses(tree, |id| {
            if keep(&tree.node(id).x) {
                mixed(id) / &mass
            } else {
                BigRational::zero()
            }
        }))
    };
    let p_dollar = condition(&|x| !x.is_infinite(), "no explosion")?;
    let p_euro = condition(&|x| !x.is_zero(), "no devaluation")?;
    Ok(PhysicalLattice {
        tree: tree.clone(),
        p,
        p_dollar,
        p_euro,
    })
}

impl PhysicalLattice {
    pub fn tree(&self) -> &DualTree {
        &self.tree
    }

    pub fn p(&self, id: usize) -> &BigRational {
        &self.p[id]
    }

    pub fn p_dollar(&self, id: usize) -> &BigRational {
        &self.p_dollar[id]
    }

    pub fn p_euro(&self, id: usize) -> &BigRational {
        &self.p_euro[id]
    }

    /// Nodes charged by `P`.
    pub fn support(&self) -> Vec<bool> {
        self.p.iter().map(|m| !m.is_zero()).collect()
    }

    fn terminal_mass(&self, hit: impl Fn(&Extended<BigRational>) -> bool) -> BigRational {
        self.tree
            .terminals()
            .filter(|t| hit(&t.x))
            .map(|t| self.p[t.id].clone())
            .sum()
    }

    pub fn p_explosion(&self) -> BigRational {
        self.terminal_mass(|x| x.is_infinite())
    }

    pub fn p_devaluation(&self) -> BigRational {
        self.terminal_mass(|x| x.is_zero())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalReport {
    #[serde(with = "rational_str")]
    pub p_explosion: BigRational,
    #[serde(with = "rational_str")]
    pub p_devaluation: BigRational,
    /// `x0 − E$[X_T]`.
    #[serde(with = "rational_str")]
    pub defect_dollar: BigRational,
    /// `1/x0 − E€[1/X_T]`.
    #[serde(with = "rational_str")]
    pub defect_euro: BigRational,
    pub interpretation_holds: bool,
    pub support_checks_passed: bool,
    pub replication_checks_passed: bool,
}

impl PhysicalReport {
    pub fn all_passed(&self) -> bool {
        self.interpretation_holds && self.support_checks_passed && self.replication_checks_passed
    }
}

/// Runs the consistency checks with the Euro forward and the at-the-money
/// call and put as test claims.
pub fn consistency_checks(pl: &PhysicalLattice) -> Result<PhysicalReport, LatticeError> {
    let tree = pl.tree();
    let k = tree.x0().clone();
    let claims = [
        TreeClaim::euro_forward(tree),
        TreeClaim::call(tree, &k),
        TreeClaim::put(tree, &k),
    ];
    consistency_checks_with(pl, &claims)
}

pub fn consistency_checks_with(
    pl: &PhysicalLattice,
    claims: &[TreeClaim],
) -> Result<PhysicalReport, LatticeError> {
    let tree = pl.tree();
    let x0 = tree.x0();

    // Before absorption the two conditioned measures charge the same nodes,
    // and P is equivalent to their average on terminal paths.
    let pre_absorption = tree
        .nodes()
        .iter()
        .filter(|n| n.x.is_interior())
        .all(|n| pl.p_dollar(n.id).is_zero() == pl.p_euro(n.id).is_zero());
    let equivalent = tree.terminals().all(|t| {
        let p = !pl.p(t.id).is_zero();
        let avg = !pl.p_dollar(t.id).is_zero() || !pl.p_euro(t.id).is_zero();
        p == avg
    });
    let support_checks_passed = pre_absorption && equivalent;

    let mut mean_x = BigRational::zero();
    let mut mean_inv = BigRational::zero();
    for t in tree.terminals() {
        if let Extended::Finite(x) = &t.x {
            mean_x += tree.prob(Measure::Dollar, t.id) * x;
            mean_inv += tree.prob(Measure::Euro, t.id) / x;
        }
    }
    let defect_dollar = x0 - mean_x;
    let defect_euro = x0.recip() - mean_inv;
    let p_explosion = pl.p_explosion();
    let p_devaluation = pl.p_devaluation();
    let interpretation_holds = (!p_explosion.is_zero() == (defect_dollar > BigRational::zero()))
        && (!p_devaluation.is_zero() == (defect_euro > BigRational::zero()));

    let support = pl.support();
    let mut replication_checks_passed = true;
    for claim in claims {
        let formula = price_on_tree(tree, claim)?.total_dollar;
        let (cost, strategy) = superreplicate_on_support(tree, claim, &support)?;
        replication_checks_passed &= cost == formula && strategy.covers(tree, claim, &support);
    }

    Ok(PhysicalReport {
        p_explosion,
        p_devaluation,
        defect_dollar,
        defect_euro,
        interpretation_holds,
        support_checks_passed,
        replication_checks_passed,
    })
}

/// `E$[X_T] < x0`, the strict-supermartingale signature of explosion.
pub fn loses_mass(tree: &DualTree) -> bool {
    let mean: BigRational = tree
        .terminals()
        .filter_map(|t| t.x.to_finite().map(|x| tree.prob(Measure::Dollar, t.id) * x))
        .sum();
    mean < *tree.x0()
}
