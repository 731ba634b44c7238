//! Reference values computed by numerical quadrature, independent of the
//! closed forms used in the library.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `P(-a < Z < a)` for a standard normal `Z`.
pub fn central_mass(a: f64) -> f64 {
    simpson(normal_pdf, -a, a, 20_000)
}

/// Density at `y > 0` of Brownian motion from `y0`, killed at zero, at time `t`.
pub fn killed_density(y: f64, y0: f64, t: f64) -> f64 {
    let s = t.sqrt();
    (normal_pdf((y - y0) / s) - normal_pdf((y + y0) / s)) / s
}

/// `E[g(W_t) 1{no hit of 0}]` for Brownian motion from `y0`.
pub fn killed_expectation(g: impl Fn(f64) -> f64, y0: f64, t: f64) -> f64 {
    let top = y0 + 12.0 * t.sqrt();
    // the integrand vanishes linearly at zero; start just above it
    simpson(|y| if y > 0.0 { g(y) * killed_density(y, y0, t) } else { 0.0 }, 0.0, top, 200_000)
}

/// Probability that Brownian motion from `y0` hits zero before `t`.
pub fn absorption_probability(y0: f64, t: f64) -> f64 {
    1.0 - killed_expectation(|_| 1.0, y0, t)
}

/// `E[1/R_t]` for a three-dimensional Bessel process from `r0`, from its
/// transition density `(r/r0) × killed density`.
pub fn bes3_inverse_mean(r0: f64, t: f64) -> f64 {
    killed_expectation(|r| (r / r0) / r, r0, t)
}

/// Lognormal call `E[(x0 exp(v√t Z − v²t/2) − K)^+]` by quadrature over `Z`.
pub fn lognormal_call(x0: f64, k: f64, v: f64, t: f64) -> f64 {
    let s = v * t.sqrt();
    simpson(
        |z| (x0 * (s * z - 0.5 * s * s).exp() - k).max(0.0) * normal_pdf(z),
        -12.0,
        12.0,
        40_000,
    )
}

/// Deterministic byte genome for random lattice objects.
pub fn genome(seed: u64, len: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bytes = vec![0u8; len];
    rng.fill_bytes(&mut bytes);
    bytes
}
