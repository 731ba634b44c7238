use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use numeraire::extended::ExactValue;
use numeraire::lattice::random::{
    claim_from_source, event_from_source, functional_from_source, stopping_rule_from_source,
    tree_from_source, ByteSource,
};
use numeraire::lattice::{
    bayes_check, martingale_transfer_check, parity_and_equivalence_report, price_on_tree,
    superreplicate_backward, verify_numeraire_identity, Measure, StoppingRule, TreeClaim,
};
use numeraire::physical::{build_physical, consistency_checks, loses_mass};

fn genome() -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(any::<u8>(), 0..600)
}

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn numeraire_identity_is_exact(bytes in genome()) {
        let mut src = ByteSource::new(&bytes);
        let tree = tree_from_source(&mut src, 4);
        let tau = stopping_rule_from_source(&tree, &mut src);
        let event = event_from_source(&tree, &tau, &mut src);
        prop_assert!(verify_numeraire_identity(&tree, &event, &tau).unwrap().is_zero());
    }

    #[test]
    fn bayes_formula_is_exact(bytes in genome()) {
        let mut src = ByteSource::new(&bytes);
        let tree = tree_from_source(&mut src, 4);
        let tau = stopping_rule_from_source(&tree, &mut src);
        let rho = tau.min(&stopping_rule_from_source(&tree, &mut src));
        let y = functional_from_source(&tree, &tau, &mut src);
        for row in bayes_check(&tree, &y, &rho, &tau).unwrap() {
            prop_assert!(row.residual().is_zero());
        }
    }

    #[test]
    fn dollar_and_euro_prices_agree(bytes in genome()) {
        let mut src = ByteSource::new(&bytes);
        let tree = tree_from_source(&mut src, 4);
        let claim = claim_from_source(&tree, &mut src);
        let p = price_on_tree(&tree, &claim).unwrap();
        prop_assert_eq!(&p.total_euro * tree.x0(), p.total_dollar.clone());
        prop_assert_eq!(p.total_euro, p.euro_price);
        prop_assert!(!p.correction.is_negative());
        prop_assert!(p.classical <= p.total_dollar);
    }

    #[test]
    fn pricing_is_linear(bytes in genome(), a in 0i64..20) {
        let mut src = ByteSource::new(&bytes);
        let tree = tree_from_source(&mut src, 4);
        let c1 = claim_from_source(&tree, &mut src);
        let c2 = claim_from_source(&tree, &mut src);
        let a = r(a, 3);
        let lhs = price_on_tree(&tree, &c1.add_scaled(&c2, &a)).unwrap();
        let (p1, p2) = (price_on_tree(&tree, &c1).unwrap(), price_on_tree(&tree, &c2).unwrap());
        prop_assert_eq!(lhs.classical, &p1.classical + &a * &p2.classical);
        prop_assert_eq!(lhs.correction, &p1.correction + &a * &p2.correction);
    }

    #[test]
    fn one_step_defect_equals_explosion_mass(bytes in genome()) {
        let tree = tree_from_source(&mut ByteSource::new(&bytes), 4);
        for d in tree.duality_defects() {
            prop_assert_eq!(&d.dollar_defect, &d.explosion_mass);
            prop_assert_eq!(&d.euro_defect, &d.devaluation_mass);
        }
    }

    #[test]
    fn parity_and_equivalence_residuals_vanish(bytes in genome(), k in 1i64..30) {
        let tree = tree_from_source(&mut ByteSource::new(&bytes), 4);
        let strikes = [r(k, 7), tree.x0().clone()];
        for row in parity_and_equivalence_report(&tree, &strikes).unwrap() {
            prop_assert!(row.residuals_vanish(), "{:?}", row);
        }
    }

    #[test]
    fn transfer_answers_agree(bytes in genome()) {
        let mut src = ByteSource::new(&bytes);
        let tree = tree_from_source(&mut src, 4);
        let tau = stopping_rule_from_source(&tree, &mut src);
        let process: Vec<ExactValue> = (0..tree.len())
            .map(|_| ExactValue::nonneg(src.rational()).unwrap())
            .collect();
        let (d, e) = martingale_transfer_check(&tree, &process, &tau).unwrap();
        prop_assert_eq!(d, e);
        let x: Vec<ExactValue> = tree.nodes().iter().map(|n| n.x.clone()).collect();
        let (d, e) = martingale_transfer_check(&tree, &x, &StoppingRule::terminal(&tree)).unwrap();
        prop_assert_eq!(d, !loses_mass(&tree));
        prop_assert_eq!(d, e);
    }

    #[test]
    fn superreplication_bounds_formula(bytes in genome()) {
        let mut src = ByteSource::new(&bytes);
        let tree = tree_from_source(&mut src, 4);
        let claim = claim_from_source(&tree, &mut src);
        let formula = price_on_tree(&tree, &claim).unwrap().total_dollar;
        let (cost, strategy) = superreplicate_backward(&tree, &claim).unwrap();
        prop_assert!(strategy.is_self_financing(&tree));
        prop_assert!(strategy.covers(&tree, &claim, &vec![true; tree.len()]));
        prop_assert!(cost >= formula);
        if tree.is_complete() {
            prop_assert_eq!(cost, formula);
        }
    }

    #[test]
    fn forward_is_replicated_at_spot(bytes in genome()) {
        let tree = tree_from_source(&mut ByteSource::new(&bytes), 4);
        let (cost, _) = superreplicate_backward(&tree, &TreeClaim::euro_forward(&tree)).unwrap();
        prop_assert_eq!(&cost, tree.x0());
    }

    #[test]
    fn physical_supports_and_interpretation(bytes in genome()) {
        let tree = tree_from_source(&mut ByteSource::new(&bytes), 4);
        let pl = build_physical(&tree).unwrap();
        let rep = consistency_checks(&pl).unwrap();
        prop_assert!(rep.support_checks_passed);
        prop_assert!(rep.interpretation_holds);
        for n in tree.nodes() {
            let p = pl.p(n.id).is_zero();
            // both conditioned measures are absolutely continuous w.r.t. P
            prop_assert!(!p || pl.p_dollar(n.id).is_zero());
            prop_assert!(!p || pl.p_euro(n.id).is_zero());
            let q = tree.prob(Measure::Dollar, n.id).is_zero() && tree.prob(Measure::Euro, n.id).is_zero();
            prop_assert_eq!(p, q);
        }
        if tree.is_complete() {
            prop_assert!(rep.replication_checks_passed);
        }
    }
}
