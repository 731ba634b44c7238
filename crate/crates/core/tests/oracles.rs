mod common;

use numeraire::catalog::{black_call, get_model, get_model_with, normal_cdf};
use numeraire::extended::RealValue;
use numeraire::lattice::Measure;
use numeraire::sde::{estimate, path_rng, simulate, SimConfig};
use rand::Rng;
use rand_distr::StandardNormal;

use common::*;

#[test]
fn quadrature_matches_closed_forms() {
    let want = 0.682_689_492_137_085_9;
    assert!((central_mass(1.0) - want).abs() < 1e-10);
    assert!((bes3_inverse_mean(1.0, 1.0) - want).abs() < 1e-8);
    assert!((absorption_probability(1.0, 1.0) - (1.0 - want)).abs() < 1e-8);
    for (x0, t) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.25)] {
        let e = get_model_with("recip_bessel", x0, t).unwrap();
        let q = absorption_probability(1.0 / x0, t);
        assert!((e.reference("dual_absorption").unwrap() - q).abs() < 1e-8);
        assert!((e.reference("expected_x").unwrap() - bes3_inverse_mean(1.0 / x0, t)).abs() < 1e-8);
        let s = get_model_with("stopped_bm", x0, t).unwrap();
        assert!((s.reference("dollar_absorption").unwrap() - absorption_probability(x0, t)).abs() < 1e-8);
    }
    for x in [-2.0, -0.3, 0.0, 1.1] {
        assert!((normal_cdf(x) - (0.5 + simpson(normal_pdf, 0.0, x, 10_000))).abs() < 1e-12);
    }
    for k in [0.5, 1.0, 1.7] {
        assert!((black_call(1.0, k, 0.2, 1.0) - lognormal_call(1.0, k, 0.2, 1.0)).abs() < 1e-9);
    }
}

#[test]
fn single_reciprocal_bessel_draw() {
    let m = get_model("recip_bessel").unwrap().model;
    let seed = 42;
    let b = simulate(&m, Measure::Dollar, &SimConfig::exact(1, seed)).unwrap();
    let mut rng = path_rng(seed, Measure::Dollar, 0);
    let g: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let want = 1.0 / ((1.0 + g[0]).powi(2) + g[1] * g[1] + g[2] * g[2]).sqrt();
    assert_eq!(b.samples[0].x_t, RealValue::Finite(want));
}

#[test]
fn second_moment_matches_dual_integral() {
    // E$[X_T²] = x0 E€[X_T 1{X_T < ∞}] = E[1/W_T ; no hit] for W from 1
    let want = killed_expectation(|y| 1.0 / y, 1.0, 1.0);
    let m = get_model("recip_bessel").unwrap().model;
    let b = simulate(&m, Measure::Dollar, &SimConfig::exact(200_000, 8)).unwrap();
    let e = estimate(&b, |s| s.x_t.clone() * s.x_t.clone()).unwrap();
    assert!((e.mean - want).abs() <= 3.0 * e.stderr, "{e:?} vs {want}");
}

#[test]
fn stopped_bm_absorption_frequency() {
    let m = get_model("stopped_bm").unwrap().model;
    let b = simulate(&m, Measure::Dollar, &SimConfig::exact(100_000, 4)).unwrap();
    let f = b.fraction(|s| s.x_t.is_zero());
    let want = absorption_probability(1.0, 1.0);
    let se = (want * (1.0 - want) / 1e5).sqrt();
    assert!((f - want).abs() <= 3.0 * se);
    assert!(b.samples.iter().all(|s| s.x_t.is_zero() == s.hit_zero_time.is_some()));
    assert!(b.samples.iter().filter_map(|s| s.hit_zero_time).all(|t| t > 0.0 && t <= 1.0));
}
