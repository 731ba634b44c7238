use serde::{Deserialize, Serialize};

use super::model::DiffusionModel;
use super::simulate::{simulate, Batch, SimConfig, TerminalSample};
use super::SdeError;
use crate::extended::RealValue;
use crate::lattice::Measure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl Estimate {
    /// Sample mean and `sd / sqrt(n)` of finite values, summed in order.
    pub fn from_values(values: &[f64], seed: u64) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
                seed,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr,
            n,
            seed,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Estimate {
            mean: a * self.mean,
            stderr: a.abs() * self.stderr,
            ..*self
        }
    }
}

/// `a / b` for a z-score, with `0 / 0` read as zero.
pub fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

/// Evaluates a nonnegative functional on every sample, rejecting infinite values.
pub fn values_of(
    batch: &Batch,
    f: impl Fn(&TerminalSample) -> RealValue,
) -> Result<Vec<f64>, SdeError> {
    batch
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| match f(s) {
            RealValue::Infinite => Err(SdeError::InfiniteContribution { path: i }),
            v => Ok(v.to_f64()),
        })
        .collect()
}

pub fn estimate(
    batch: &Batch,
    f: impl Fn(&TerminalSample) -> RealValue,
) -> Result<Estimate, SdeError> {
    Ok(Estimate::from_values(&values_of(batch, f)?, batch.seed))
}

/// Estimate of a real-valued (possibly signed) functional.
pub fn estimate_signed(batch: &Batch, f: impl Fn(&TerminalSample) -> f64) -> Result<Estimate, SdeError> {
    let values = batch
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let v = f(s);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(SdeError::InfiniteContribution { path: i })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Estimate::from_values(&values, batch.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossMeasure {
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub z: f64,
}

/// Compares `E$[f(X) 1{X>0}]` with `x0 E€[f(X)/X 1{X<∞}]` from two independent
/// batches. `f` must be bounded on `(0, ∞)`.
pub fn cross_measure_check(
    model: &DiffusionModel,
    f: impl Fn(f64) -> f64,
    cfg: &SimConfig,
) -> Result<CrossMeasure, SdeError> {
    let dollar = simulate(model, Measure::Dollar, cfg)?;
    let euro = simulate(model, Measure::Euro, cfg)?;
    cross_measure_on(model.x0, &dollar, &euro, f)
}

pub fn cross_measure_on(
    x0: f64,
    dollar: &Batch,
    euro: &Batch,
    f: impl Fn(f64) -> f64,
) -> Result<CrossMeasure, SdeError> {
    let lhs = estimate_signed(dollar, |s| match s.x_t {
        RealValue::Finite(x) => f(x),
        _ => 0.0,
    })?;
    let rhs = estimate_signed(euro, |s| match s.x_t {
        RealValue::Finite(x) => x0 * f(x) / x,
        _ => 0.0,
    })?;
    let se = lhs.stderr.hypot(rhs.stderr);
    Ok(CrossMeasure {
        lhs,
        rhs,
        z: z_score(lhs.mean - rhs.mean, se),
    })
}
