use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{derive_dual_model, DiffusionModel, ExactScheme, VolFn};
use super::rng::path_rng;
use super::SdeError;
use crate::extended::RealValue;
use crate::lattice::Measure;

/// Finite states above this are treated as a numerical failure.
pub const BLOWUP_GUARD: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scheme {
    /// Euler steps with Brownian-bridge absorption at zero.
    EulerAbsorbed,
    /// The model's own exact sampler.
    Exact,
    /// A named exact sampler; must match the model's.
    ExactNamed(String),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::EulerAbsorbed => f.write_str("euler_absorbed"),
            Scheme::Exact => f.write_str("exact"),
            Scheme::ExactNamed(n) => write!(f, "exact_{n}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = SdeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euler_absorbed" => Ok(Scheme::EulerAbsorbed),
            "exact" => Ok(Scheme::Exact),
            _ => match s.strip_prefix("exact_") {
                Some(name) if !name.is_empty() => Ok(Scheme::ExactNamed(name.to_string())),
                _ => Err(SdeError::InvalidConfig(format!("unknown scheme {s:?}"))),
            },
        }
    }
}

impl Serialize for Scheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
}

fn default_steps() -> usize {
    200
}

fn default_scheme() -> Scheme {
    Scheme::Exact
}

impl SimConfig {
    pub fn exact(n: usize, seed: u64) -> Self {
        SimConfig {
            n,
            steps: default_steps(),
            seed,
            scheme: Scheme::Exact,
        }
    }

    pub fn euler(n: usize, steps: usize, seed: u64) -> Self {
        SimConfig {
            n,
            steps,
            seed,
            scheme: Scheme::EulerAbsorbed,
        }
    }

    pub fn validate(&self) -> Result<(), SdeError> {
        if self.n == 0 {
            return Err(SdeError::InvalidConfig("n must be at least 1".into()));
        }
        if self.steps == 0 {
            return Err(SdeError::InvalidConfig("steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Terminal summary of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSample {
    pub x_t: RealValue,
    /// First time `X` reached zero (`Q$` paths only).
    pub hit_zero_time: Option<f64>,
    /// `1/X` was absorbed at zero (`Q€` paths only).
    pub hit_infinity: bool,
    pub measure: Measure,
}

impl TerminalSample {
    fn dollar(x: f64, hit_zero_time: Option<f64>) -> Self {
        TerminalSample {
            x_t: RealValue::from_f64(x).unwrap_or(RealValue::Zero),
            hit_zero_time,
            hit_infinity: false,
            measure: Measure::Dollar,
        }
    }

    /// Sample of `X = 1/Y` from the dual state `y` (zero means explosion).
    fn euro(y: f64) -> Self {
        let x_t = if y > 0.0 {
            RealValue::Finite(1.0 / y)
        } else {
            RealValue::Infinite
        };
        TerminalSample {
            x_t,
            hit_zero_time: None,
            hit_infinity: y <= 0.0,
            measure: Measure::Euro,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub measure: Measure,
    pub seed: u64,
    pub samples: Vec<TerminalSample>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `Q$` paths never explode and `Q€` paths never devalue.
    pub fn check_dual_null(&self) -> Result<(), SdeError> {
        let bad = self.samples.iter().position(|s| match self.measure {
            Measure::Dollar => s.hit_infinity || s.x_t.is_infinite(),
            Measure::Euro => s.hit_zero_time.is_some() || s.x_t.is_zero(),
        });
        match bad {
            Some(i) => Err(SdeError::DualNullViolation {
                path: i,
                measure: self.measure,
            }),
            None => Ok(()),
        }
    }

    pub fn fraction(&self, pred: impl Fn(&TerminalSample) -> bool) -> f64 {
        self.samples.iter().filter(|s| pred(s)).count() as f64 / self.len() as f64
    }

    /// Writes `x_T,hit_zero_time,hit_infinity` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_T", "hit_zero_time", "hit_infinity"])?;
        for s in &self.samples {
            let hit = s.hit_zero_time.map(|t| t.to_string()).unwrap_or_default();
            w.write_record([s.x_t.to_string(), hit, s.hit_infinity.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Euler path of a driftless diffusion absorbed at zero. Between grid points
/// the path is treated as a Brownian bridge with the left-endpoint volatility.
fn euler_path(
    sigma: &VolFn,
    start: f64,
    horizon: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
    path: usize,
) -> Result<(f64, Option<f64>), SdeError> {
    let dt = horizon / steps as f64;
    let sq = dt.sqrt();
    let mut x = start;
    for i in 0..steps {
        let t = i as f64 * dt;
        let s = sigma(x, t);
        let z = normal(rng);
        let u: f64 = rng.random();
        if s == 0.0 {
            continue;
        }
        let next = x + s * sq * z;
        if !next.is_finite() || next > BLOWUP_GUARD || !s.is_finite() {
            return Err(SdeError::NumericalBlowup {
                path,
                step: i,
                value: next,
            });
        }
        if next <= 0.0 || u < (-2.0 * x * next / (s * s * dt)).exp() {
            return Ok((0.0, Some(t + dt)));
        }
        x = next;
    }
    Ok((x, None))
}

/// Brownian motion with unit volatility from `start > 0`, absorbed at zero:
/// terminal value, zero if absorbed.
fn absorbed_bm(start: f64, horizon: f64, rng: &mut ChaCha8Rng) -> f64 {
    let w = start + horizon.sqrt() * normal(rng);
    let u: f64 = rng.random();
    if w <= 0.0 || u < (-2.0 * start * w / horizon).exp() {
        0.0
    } else {
        w
    }
}

/// Norm of a three-dimensional Brownian motion from `(r0, 0, 0)` at time `horizon`.
fn bes3(r0: f64, horizon: f64, rng: &mut ChaCha8Rng) -> f64 {
    let s = horizon.sqrt();
    let a = r0 + s * normal(rng);
    let b = s * normal(rng);
    let c = s * normal(rng);
    (a * a + b * b + c * c).sqrt()
}

/// First hitting time of zero for unit-volatility Brownian motion from `x0`.
fn hitting_time(x0: f64, rng: &mut ChaCha8Rng) -> f64 {
    let z = normal(rng);
    x0 * x0 / (z * z)
}

fn exact_dollar(scheme: ExactScheme, m: &DiffusionModel, rng: &mut ChaCha8Rng) -> TerminalSample {
    let (x0, horizon) = (m.x0, m.horizon);
    match scheme {
        ExactScheme::ReciprocalBessel => TerminalSample::dollar(1.0 / bes3(1.0 / x0, horizon, rng), None),
        ExactScheme::StoppedBm => {
            let tau = hitting_time(x0, rng);
            if tau <= horizon {
                return TerminalSample::dollar(0.0, Some(tau));
            }
            // Killed density by rejection from the free Gaussian endpoint.
            loop {
                let w = x0 + horizon.sqrt() * normal(rng);
                let u: f64 = rng.random();
                if w > 0.0 && u < -(-2.0 * x0 * w / horizon).exp_m1() {
                    return TerminalSample::dollar(w, None);
                }
            }
        }
        ExactScheme::SingularTimeChange => {
            let u = hitting_time(x0, rng);
            TerminalSample::dollar(0.0, Some(-horizon * (-u).exp_m1()))
        }
        ExactScheme::Lognormal { vol } => {
            let z = normal(rng);
            TerminalSample::dollar(x0 * (vol * horizon.sqrt() * z - 0.5 * vol * vol * horizon).exp(), None)
        }
        ExactScheme::Constant => TerminalSample::dollar(x0, None),
    }
}

fn exact_euro(scheme: ExactScheme, m: &DiffusionModel, rng: &mut ChaCha8Rng) -> TerminalSample {
    let (y0, horizon) = (1.0 / m.x0, m.horizon);
    match scheme {
        ExactScheme::ReciprocalBessel => TerminalSample::euro(absorbed_bm(y0, horizon, rng)),
        ExactScheme::StoppedBm => TerminalSample::euro(1.0 / bes3(m.x0, horizon, rng)),
        // The time-changed reciprocal BES3 reaches zero exactly at the horizon.
        ExactScheme::SingularTimeChange => TerminalSample::euro(0.0),
        ExactScheme::Lognormal { vol } => {
            let z = normal(rng);
            TerminalSample::euro(y0 * (vol * horizon.sqrt() * z - 0.5 * vol * vol * horizon).exp())
        }
        ExactScheme::Constant => TerminalSample::euro(y0),
    }
}

fn resolve_exact(model: &DiffusionModel, scheme: &Scheme) -> Result<ExactScheme, SdeError> {
    let unsupported = || SdeError::SchemeUnsupported {
        scheme: scheme.to_string(),
        model: model.name.clone(),
    };
    let exact = model.exact_scheme.ok_or_else(unsupported)?;
    match scheme {
        Scheme::ExactNamed(name) if name != exact.name() && *name != model.name => Err(unsupported()),
        _ => Ok(exact),
    }
}

/// Simulates `n` terminal samples of `X` under `Q$`, or of `X = 1/Y` under
/// `Q€` with `Y` following the dual diffusion.
pub fn simulate(model: &DiffusionModel, measure: Measure, cfg: &SimConfig) -> Result<Batch, SdeError> {
    cfg.validate()?;
    let samples: Result<Vec<TerminalSample>, SdeError> = match &cfg.scheme {
        Scheme::EulerAbsorbed => {
            let (sigma, start) = match measure {
                Measure::Dollar => (model.sigma.clone(), model.x0),
                Measure::Euro => {
                    let dual = derive_dual_model(model);
                    (dual.sigma_y, dual.y0)
                }
            };
            (0..cfg.n)
                .into_par_iter()
                .map(|i| {
                    let mut rng = path_rng(cfg.seed, measure, i as u64);
                    let (end, hit) = euler_path(&sigma, start, model.horizon, cfg.steps, &mut rng, i)?;
                    Ok(match measure {
                        Measure::Dollar => TerminalSample::dollar(end, hit),
                        Measure::Euro => TerminalSample::euro(end),
                    })
                })
                .collect()
        }
        scheme => {
            let exact = resolve_exact(model, scheme)?;
            Ok((0..cfg.n)
                .into_par_iter()
                .map(|i| {
                    let mut rng = path_rng(cfg.seed, measure, i as u64);
                    match measure {
                        Measure::Dollar => exact_dollar(exact, model, &mut rng),
                        Measure::Euro => exact_euro(exact, model, &mut rng),
                    }
                })
                .collect())
        }
    };
    let batch = Batch {
        measure,
        seed: cfg.seed,
        samples: samples?,
    };
    batch.check_dual_null()?;
    Ok(batch)
}
