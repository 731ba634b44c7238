//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails. Tolerances are fixed here.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use numeraire::catalog::get_model;
use numeraire::lattice::random::{
    claim_from_source, event_from_source, functional_from_source, stopping_rule_from_source,
    tree_from_source, ByteSource,
};
use numeraire::lattice::{
    bayes_check, degenerate_tree, devaluation_tree, martingale_tree, parity_and_equivalence_report,
    price_on_tree, superreplicate_backward, two_period_tree, two_sided_tree, verify_numeraire_identity,
    DualTree, Event, Measure, StoppingRule,
};
use numeraire::physical::{build_physical, consistency_checks, loses_mass};
use numeraire::pricing::{
    parity_on_batches, price_on_batches, simulate_pair, tail_diagnostic, Claim,
};
use numeraire::sde::{cross_measure_check, simulate, Scheme, SimConfig};

use common::{absorption_probability, bes3_inverse_mean, genome, lognormal_call};

const N_MC: usize = 100_000;
const SIGMAS: f64 = 3.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Random tree with up to four periods, plus the objects drawn after it.
fn random_tree(seed: u64) -> (DualTree, Vec<u8>) {
    let bytes = genome(seed, 1024);
    let mut src = ByteSource::new(&bytes);
    let tree = tree_from_source(&mut src, 4);
    (tree, bytes)
}

fn lattice_trees(count: u64, offset: u64) -> Vec<(DualTree, Vec<u8>)> {
    let mut trees: Vec<_> = (0..count).map(|i| random_tree(offset + i)).collect();
    trees.push((two_period_tree(), genome(offset + count, 1024)));
    trees
}

fn lattice_exact_suite() -> Outcome {
    let mut failures = Vec::new();
    for (i, (tree, bytes)) in lattice_trees(200, 0).iter().enumerate() {
        let mut src = ByteSource::new(&bytes[512..]);
        let tau = stopping_rule_from_source(tree, &mut src);
        let other = stopping_rule_from_source(tree, &mut src);
        let rho = tau.min(&other);
        let event = event_from_source(tree, &tau, &mut src);
        let y = functional_from_source(tree, &tau, &mut src);
        let claim = claim_from_source(tree, &mut src);

        let mut ok = true;
        for (a, t) in [
            (&event, &tau),
            (&Event::everything(tree), &StoppingRule::terminal(tree)),
        ] {
            ok &= verify_numeraire_identity(tree, a, t).is_ok_and(|res| res.is_zero());
        }
        ok &= bayes_check(tree, &y, &rho, &tau)
            .is_ok_and(|rows| rows.iter().all(|row| row.residual().is_zero()));
        let mut strikes = vec![r(1, 2), r(1, 1), r(2, 1), tree.x0().clone()];
        strikes.push(r(1 + i as i64 % 7, 3));
        ok &= parity_and_equivalence_report(tree, &strikes)
            .is_ok_and(|rows| rows.iter().all(|row| row.residuals_vanish()));
        ok &= price_on_tree(tree, &claim).is_ok_and(|p| p.total_euro == p.euro_price);
        if !ok {
            failures.push(i);
        }
    }
    outcome(
        failures.is_empty(),
        format!("201 trees, nonzero residuals on {:?}", failures),
    )
}

fn superreplication_equivalence() -> Outcome {
    let (mut price_gaps, mut uncovered, mut incomplete_gaps) = (0, 0, 0);
    let trees = lattice_trees(200, 0);
    for (tree, bytes) in &trees {
        let mut src = ByteSource::new(&bytes[512..]);
        // same draw order as the exact suite, so the claims coincide
        let tau = stopping_rule_from_source(tree, &mut src);
        let _ = stopping_rule_from_source(tree, &mut src);
        let _ = event_from_source(tree, &tau, &mut src);
        let _ = functional_from_source(tree, &tau, &mut src);
        let claim = claim_from_source(tree, &mut src);

        let formula = price_on_tree(tree, &claim).expect("finite claim").total_dollar;
        match superreplicate_backward(tree, &claim) {
            Ok((cost, strategy)) => {
                if cost != formula {
                    price_gaps += 1;
                    if !tree.is_complete() {
                        incomplete_gaps += 1;
                    }
                }
                if !strategy.covers(tree, &claim, &vec![true; tree.len()]) {
                    uncovered += 1;
                }
            }
            Err(_) => uncovered += 1,
        }
    }
    outcome(
        price_gaps == 0 && uncovered == 0,
        format!(
            "{} trees: LP price differs from the formula on {price_gaps} ({incomplete_gaps} of them incomplete), payoff not dominated on {uncovered}",
            trees.len()
        ),
    )
}

fn euro_price_recip_bessel() -> Outcome {
    let m = get_model("recip_bessel").expect("catalog").model;
    let want_classical = bes3_inverse_mean(1.0, 1.0);
    let want_correction = absorption_probability(1.0, 1.0);
    let (d, e) = simulate_pair(&m, &SimConfig::exact(N_MC, 2024)).expect("simulation");
    let p = price_on_batches(&m, &Claim::euro_forward(), &d, &e).expect("price");
    let c = p.correction.expect("finite correction");
    let ok = (p.classical.mean - want_classical).abs() <= SIGMAS * p.classical.stderr
        && (c.mean - want_correction).abs() <= SIGMAS * c.stderr
        && (p.total() - 1.0).abs() <= SIGMAS * p.total_se;
    outcome(
        ok,
        format!(
            "classical {:.4}±{:.4} (ref {want_classical:.4}), correction {:.4}±{:.4} (ref {want_correction:.4}), total {:.4}±{:.4}",
            p.classical.mean, p.classical.stderr, c.mean, c.stderr, p.total(), p.total_se
        ),
    )
}

fn put_call_parity() -> Outcome {
    let m = get_model("recip_bessel").expect("catalog").model;
    let reference = -absorption_probability(1.0, 1.0);
    let (d, e) = simulate_pair(&m, &SimConfig::exact(N_MC, 77)).expect("simulation");
    let rows = parity_on_batches(&m, &[0.5, 1.0, 2.0], &d, &e).expect("parity");
    let ok = rows.iter().all(|row| {
        row.residual.within(SIGMAS)
            && (row.classical_violation.mean - reference).abs()
                <= SIGMAS * row.classical_violation.stderr
    });
    let detail = rows
        .iter()
        .map(|row| {
            format!(
                "K={}: residual z={:.2}, violation {:.4}±{:.4}",
                row.strike, row.residual.z, row.classical_violation.mean, row.classical_violation.stderr
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(ok, format!("{detail} (ref {reference:.4})"))
}

fn singular_model() -> Outcome {
    let m = get_model("singular_timechange").expect("catalog").model;
    let (d, e) = simulate_pair(&m, &SimConfig::exact(N_MC, 5)).expect("simulation");
    let absorbed = d.fraction(|s| s.x_t.is_zero());
    let exploded = e.fraction(|s| s.hit_infinity);
    let p = price_on_batches(&m, &Claim::euro_forward(), &d, &e).expect("price");
    let c = p.correction.expect("finite correction").mean;
    let ok = absorbed >= 0.999
        && exploded >= 0.999
        && (p.total() - m.x0).abs() <= 1e-12
        && c >= 0.999 * m.x0;
    outcome(
        ok,
        format!(
            "Q$ absorption {absorbed:.4}, Q€ explosion {exploded:.4}, forward total {:.4} with correction {c:.4}",
            p.total()
        ),
    )
}

fn martingale_baseline() -> Outcome {
    let entry = get_model("exp_martingale_baseline").expect("catalog");
    let m = entry.model;
    let vol = entry.references["volatility"];
    let (d, e) = simulate_pair(&m, &SimConfig::exact(N_MC, 99)).expect("simulation");
    let mut ok = true;
    let mut detail = Vec::new();
    for k in [0.8, 1.0, 1.25] {
        let p = price_on_batches(&m, &Claim::call(k), &d, &e).expect("price");
        let c = p.correction.expect("finite correction").mean;
        let want = lognormal_call(m.x0, k, vol, m.horizon);
        ok &= c < 1e-3 && (p.total() - want).abs() <= SIGMAS * p.total_se;
        detail.push(format!("K={k}: {:.5}±{:.5} (ref {want:.5}), correction {c}", p.total(), p.total_se));
    }
    outcome(ok, detail.join("; "))
}

fn infinite_prices() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["recip_bessel", "singular_timechange"] {
        let m = get_model(name).expect("catalog").model;
        let claim = Claim::self_quantoed(1.0);
        let p = price_on_batches(
            &m,
            &claim,
            &simulate(&m, Measure::Dollar, &SimConfig::exact(1000, 1)).expect("simulation"),
            &simulate(&m, Measure::Euro, &SimConfig::exact(1000, 1)).expect("simulation"),
        )
        .expect("price");
        let tail = tail_diagnostic(&m, &claim, &[1_000, 10_000, 100_000], 31, 200, Scheme::Exact)
            .expect("tail diagnostic");
        ok &= p.total_dollar.is_infinite() && p.flags.analytic_infinite && tail.increasing;
        let means: Vec<String> = tail.points.iter().map(|pt| format!("{:.1}", pt.running_mean)).collect();
        detail.push(format!(
            "{name}: total {}, flag {}, running means [{}]",
            p.total_dollar,
            p.flags.analytic_infinite,
            means.join(", ")
        ));
    }
    outcome(ok, detail.join("; "))
}

fn cross_measure() -> Outcome {
    let m = get_model("recip_bessel").expect("catalog").model;
    type Functional = (&'static str, fn(f64) -> f64);
    let fs: [Functional; 3] = [
        ("1", |_| 1.0),
        ("min(x,1)", |x| x.min(1.0)),
        ("1{x>1}", |x| if x > 1.0 { 1.0 } else { 0.0 }),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, f) in fs {
        let zs: Vec<f64> = (0..3)
            .map(|s| cross_measure_check(&m, f, &SimConfig::exact(N_MC, 1000 + s)).expect("simulation").z)
            .collect();
        let good = zs.iter().filter(|z| z.abs() <= SIGMAS).count();
        ok &= good >= 2;
        detail.push(format!("f={label}: z={:.2?}", zs));
    }
    outcome(ok, detail.join("; "))
}

fn physical_module() -> Outcome {
    let (mut support, mut interpretation, mut replication, mut direct) = (0, 0, 0, 0);
    let mut trees: Vec<DualTree> = (0..100).map(|i| random_tree(10_000 + i).0).collect();
    trees.extend([
        two_period_tree(),
        martingale_tree(),
        devaluation_tree(),
        two_sided_tree(),
        degenerate_tree(),
    ]);
    for tree in &trees {
        let pl = build_physical(tree).expect("conditioning events have mass");
        let rep = consistency_checks(&pl).expect("finite claims");
        support += usize::from(!rep.support_checks_passed);
        interpretation += usize::from(!rep.interpretation_holds);
        replication += usize::from(!rep.replication_checks_passed);
        // explosion mass > 0 ⟺ E$[X_T] < x0, recomputed from the tree
        let explodes = tree
            .terminals()
            .any(|t| t.x.is_infinite() && !tree.prob(Measure::Euro, t.id).is_zero());
        direct += usize::from(explodes != loses_mass(tree));
    }
    outcome(
        support + interpretation + replication + direct == 0,
        format!(
            "{} trees: support failures {support}, interpretation failures {interpretation} (+{direct} direct), minimal-cost failures {replication}",
            trees.len()
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 9] = [
        ("lattice exact suite", lattice_exact_suite, Duration::from_secs(10)),
        ("superreplication oracle equivalence", superreplication_equivalence, Duration::from_secs(30)),
        ("price of a Euro, reciprocal Bessel", euro_price_recip_bessel, Duration::from_secs(5)),
        ("put-call parity, reciprocal Bessel", put_call_parity, Duration::from_secs(10)),
        ("singular model", singular_model, Duration::from_secs(10)),
        ("martingale baseline", martingale_baseline, Duration::from_secs(5)),
        ("infinite prices", infinite_prices, Duration::from_secs(10)),
        ("cross-measure consistency", cross_measure, Duration::from_secs(15)),
        ("physical measure", physical_module, Duration::from_secs(10)),
    ];
    let mut all = true;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let passed = out.passed && elapsed <= *budget;
        all &= passed;
        println!(
            "criterion {} {:<38} {} ({:.2}s of {}s) {}",
            i + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
