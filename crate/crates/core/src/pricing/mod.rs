//! Dual-measure prices of terminal claims over simulated models.
//!
//! A claim is a pair `(D$, D€)`. Its Dollar price is the classical `Q$`
//! expectation of `D$` plus the correction `x0 E€[D€ 1{X_T = ∞}]` carried by
//! paths on which the Dollar collapses against the Euro.

mod claim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use claim::{Claim, ClaimKind};

use crate::extended::RealValue;
use crate::lattice::Measure;
use crate::sde::{
    estimate, estimate_signed, simulate, z_score, Batch, DiffusionModel, Estimate, Integrability,
    SdeError, SimConfig, TerminalSample,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Sde(#[from] SdeError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceFlags {
    /// The model rules the correction infinite; no estimate is reported.
    pub analytic_infinite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualPrice {
    pub claim: Claim,
    pub classical: Estimate,
    /// `x0 E€[D€ 1{X_T = ∞}]`; absent when flagged infinite.
    pub correction: Option<Estimate>,
    pub total_dollar: RealValue,
    pub total_euro: RealValue,
    /// Standard error of the total, combining both legs.
    pub total_se: f64,
    pub flags: PriceFlags,
}

/// Flat result record used by the command line front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceRecord {
    pub claim: String,
    #[serde(rename = "K")]
    pub strike: Option<f64>,
    pub classical: f64,
    pub classical_se: f64,
    pub correction: Option<f64>,
    pub correction_se: Option<f64>,
    #[serde(with = "real_or_inf")]
    pub total_dollar: f64,
    #[serde(with = "real_or_inf")]
    pub total_euro: f64,
    pub flags: PriceFlags,
}

/// Finite totals as JSON numbers, infinite ones as the string `"inf"`.
pub mod real_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

impl DualPrice {
    pub fn record(&self) -> PriceRecord {
        PriceRecord {
            claim: self.claim.label(),
            strike: self.claim.strike,
            classical: self.classical.mean,
            classical_se: self.classical.stderr,
            correction: self.correction.map(|c| c.mean),
            correction_se: self.correction.map(|c| c.stderr),
            total_dollar: self.total_dollar.to_f64(),
            total_euro: self.total_euro.to_f64(),
            flags: self.flags,
        }
    }

    pub fn total(&self) -> f64 {
        self.total_dollar.to_f64()
    }
}

/// Classical and correction legs of an arbitrary payoff pair: `D$` on `Q$`
/// paths and `x0 D€ 1{X_T = ∞}` on `Q€` paths. `∞ · 0 = 0` is applied
/// before any arithmetic.
pub fn payoff_legs(
    x0: f64,
    d_dollar: impl Fn(&RealValue) -> RealValue,
    d_euro: impl Fn(&RealValue) -> RealValue,
    dollar: &Batch,
    euro: &Batch,
) -> Result<(Estimate, Estimate), SdeError> {
    let classical = estimate(dollar, |s| d_dollar(&s.x_t))?;
    let correction = estimate(euro, |s| d_euro(&s.x_t).when(s.hit_infinity))?.scaled(x0);
    Ok((classical, correction))
}

fn dollar_legs(
    x0: f64,
    claim: &Claim,
    dollar: &Batch,
    euro: &Batch,
) -> Result<(Estimate, Estimate), SdeError> {
    payoff_legs(x0, |x| claim.d_dollar(x), |x| claim.d_euro(x), dollar, euro)
}

/// Prices on existing batches; reusing batches gives common random numbers.
pub fn price_on_batches(
    model: &DiffusionModel,
    claim: &Claim,
    dollar: &Batch,
    euro: &Batch,
) -> Result<DualPrice, PricingError> {
    check_batches(dollar, euro)?;
    let x0 = model.x0;
    if model.flag(claim.kind) == Integrability::Nonintegrable {
        let classical = estimate(dollar, |s| claim.d_dollar(&s.x_t))?;
        return Ok(DualPrice {
            claim: *claim,
            classical,
            correction: None,
            total_dollar: RealValue::Infinite,
            total_euro: RealValue::Infinite,
            total_se: f64::NAN,
            flags: PriceFlags {
                analytic_infinite: true,
            },
        });
    }
    let (classical, correction) = dollar_legs(x0, claim, dollar, euro)?;
    let total = classical.mean + correction.mean;
    let total_dollar = RealValue::from_f64(total.max(0.0)).unwrap_or(RealValue::Zero);
    let total_euro = RealValue::from_f64((total / x0).max(0.0)).unwrap_or(RealValue::Zero);
    Ok(DualPrice {
        claim: *claim,
        classical,
        correction: Some(correction),
        total_dollar,
        total_euro,
        total_se: classical.stderr.hypot(correction.stderr),
        flags: PriceFlags::default(),
    })
}

fn check_batches(dollar: &Batch, euro: &Batch) -> Result<(), PricingError> {
    if dollar.measure != Measure::Dollar || euro.measure != Measure::Euro {
        return Err(PricingError::Config(
            "expected a Q$ batch and a Q€ batch, in that order".into(),
        ));
    }
    Ok(())
}

/// Simulates both measures and prices the claim.
pub fn price(model: &DiffusionModel, claim: &Claim, cfg: &SimConfig) -> Result<DualPrice, PricingError> {
    let (dollar, euro) = simulate_pair(model, cfg)?;
    price_on_batches(model, claim, &dollar, &euro)
}

pub fn simulate_pair(model: &DiffusionModel, cfg: &SimConfig) -> Result<(Batch, Batch), PricingError> {
    Ok((
        simulate(model, Measure::Dollar, cfg)?,
        simulate(model, Measure::Euro, cfg)?,
    ))
}

/// A signed quantity estimated from both batches, with a z-score against zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub stderr: f64,
    pub z: f64,
}

impl Residual {
    fn from_legs(dollar: Estimate, euro: Estimate, shift: f64) -> Self {
        let value = dollar.mean + euro.mean + shift;
        let stderr = dollar.stderr.hypot(euro.stderr);
        Residual {
            value,
            stderr,
            z: z_score(value, stderr),
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z.abs() <= sigmas
    }
}

/// Estimates `Σ a_i p$(c_i)` from per-sample linear combinations, so that
/// shared randomness cancels in the standard error. Infinite payoffs turn
/// into infinite values, which the estimator rejects.
fn combined_dollar(
    x0: f64,
    legs: &[(f64, Claim)],
    dollar: &Batch,
    euro: &Batch,
) -> Result<(Estimate, Estimate), SdeError> {
    let on = |batch: &Batch, f: &dyn Fn(&TerminalSample, &Claim) -> RealValue| {
        estimate_signed(batch, |s| legs.iter().map(|(a, c)| a * f(s, c).to_f64()).sum())
    };
    let d = on(dollar, &|s, c| c.d_dollar(&s.x_t))?;
    let e = on(euro, &|s, c| c.d_euro(&s.x_t).when(s.hit_infinity))?.scaled(x0);
    Ok((d, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityRow {
    #[serde(rename = "K")]
    pub strike: f64,
    pub call: f64,
    pub call_se: f64,
    pub put: f64,
    pub put_se: f64,
    /// `p(C_K) + K − p(P_K) − x0`.
    pub residual: Residual,
    /// `E$[(X−K)^+] + K − E$[(K−X)^+] − x0`.
    pub classical_violation: Estimate,
    /// `x0 Q€(X_T = ∞)`.
    pub correction_mass: Estimate,
}

pub fn parity_table(model: &DiffusionModel, strikes: &[f64], cfg: &SimConfig) -> Result<Vec<ParityRow>, PricingError> {
    let (dollar, euro) = simulate_pair(model, cfg)?;
    parity_on_batches(model, strikes, &dollar, &euro)
}

pub fn parity_on_batches(
    model: &DiffusionModel,
    strikes: &[f64],
    dollar: &Batch,
    euro: &Batch,
) -> Result<Vec<ParityRow>, PricingError> {
    check_batches(dollar, euro)?;
    let x0 = model.x0;
    let mass = estimate(euro, |s| RealValue::one().when(s.hit_infinity))?.scaled(x0);
    strikes
        .iter()
        .map(|&k| {
            let (call, put) = (checked(ClaimKind::Call, k)?, checked(ClaimKind::Put, k)?);
            let pc = price_on_batches(model, &call, dollar, euro)?;
            let pp = price_on_batches(model, &put, dollar, euro)?;
            let (d, e) = combined_dollar(x0, &[(1.0, call), (-1.0, put)], dollar, euro)?;
            let classical_violation = estimate_signed(dollar, |s| {
                call.d_dollar(&s.x_t).to_f64() - put.d_dollar(&s.x_t).to_f64() + k - x0
            })?;
            Ok(ParityRow {
                strike: k,
                call: pc.total(),
                call_se: pc.total_se,
                put: pp.total(),
                put_se: pp.total_se,
                residual: Residual::from_legs(d, e, k - x0),
                classical_violation,
                correction_mass: mass,
            })
        })
        .collect()
}

fn checked(kind: ClaimKind, k: f64) -> Result<Claim, PricingError> {
    Claim::new(kind, Some(k))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntlRow {
    #[serde(rename = "K")]
    pub strike: f64,
    /// `p$(C_K) − x0 K p€(dollar put at 1/K)`.
    pub call_residual: Residual,
    /// `p$(P_K) − x0 K p€(dollar call at 1/K)`.
    pub put_residual: Residual,
}

/// Per-sample contributions of `a · p€(c)` expressed in Dollars: `a D€` on
/// `Q€` paths and `(a/x0) D$ 1{X_T = 0}` on `Q$` paths.
fn euro_legs(x0: f64, a: f64, c: &Claim, dollar: &Batch, euro: &Batch) -> Result<(Estimate, Estimate), SdeError> {
    let d = estimate(dollar, |s| c.d_dollar(&s.x_t).when(s.x_t.is_zero()))?.scaled(a / x0);
    let e = estimate(euro, |s| c.d_euro(&s.x_t))?.scaled(a);
    Ok((d, e))
}

fn equivalence_residual(
    x0: f64,
    k: f64,
    dollar_claim: Claim,
    euro_claim: Claim,
    dollar: &Batch,
    euro: &Batch,
) -> Result<Residual, PricingError> {
    // Differences are taken sample by sample on each batch.
    let a = x0 * k;
    let diff = |batch: &Batch, own: &dyn Fn(&TerminalSample) -> RealValue, other: &dyn Fn(&TerminalSample) -> RealValue| {
        estimate_signed(batch, |s| own(s).to_f64() - other(s).to_f64())
    };
    let d = diff(
        dollar,
        &|s| dollar_claim.d_dollar(&s.x_t),
        &|s| euro_claim.d_dollar(&s.x_t).when(s.x_t.is_zero()).scale(&(a / x0)),
    )?;
    let e = diff(
        euro,
        &|s| dollar_claim.d_euro(&s.x_t).when(s.hit_infinity).scale(&x0),
        &|s| euro_claim.d_euro(&s.x_t).scale(&a),
    )?;
    Ok(Residual::from_legs(d, e, 0.0))
}

pub fn intl_equivalence_table(
    model: &DiffusionModel,
    strikes: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<IntlRow>, PricingError> {
    let (dollar, euro) = simulate_pair(model, cfg)?;
    intl_on_batches(model, strikes, &dollar, &euro)
}

pub fn intl_on_batches(
    model: &DiffusionModel,
    strikes: &[f64],
    dollar: &Batch,
    euro: &Batch,
) -> Result<Vec<IntlRow>, PricingError> {
    check_batches(dollar, euro)?;
    let x0 = model.x0;
    strikes
        .iter()
        .map(|&k| {
            if !(k > 0.0 && k.is_finite()) {
                return Err(PricingError::Config(format!("strike {k} must be positive")));
            }
            let call = checked(ClaimKind::Call, k)?;
            let put = checked(ClaimKind::Put, k)?;
            let dput = checked(ClaimKind::DollarPut, 1.0 / k)?;
            let dcall = checked(ClaimKind::DollarCall, 1.0 / k)?;
            Ok(IntlRow {
                strike: k,
                call_residual: equivalence_residual(x0, k, call, dput, dollar, euro)?,
                put_residual: equivalence_residual(x0, k, put, dcall, dollar, euro)?,
            })
        })
        .collect()
}

/// Euro price `E€[D€] + (1/x0) E$[D$ 1{X_T = 0}]` of a claim.
pub fn euro_price_on_batches(
    model: &DiffusionModel,
    claim: &Claim,
    dollar: &Batch,
    euro: &Batch,
) -> Result<Estimate, PricingError> {
    check_batches(dollar, euro)?;
    let (d, e) = euro_legs(model.x0, 1.0, claim, dollar, euro)?;
    Ok(Estimate {
        mean: d.mean + e.mean,
        stderr: d.stderr.hypot(e.stderr),
        ..e
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectReport {
    /// `x0 − E$[X_T]`.
    pub defect: Estimate,
    /// `x0 Q€(X_T = ∞)`.
    pub dual_mass: Estimate,
    /// z-score of `defect − dual_mass`.
    pub z: f64,
    /// Defect more than three standard errors above zero.
    pub strict: bool,
}

pub fn martingale_defect(model: &DiffusionModel, cfg: &SimConfig) -> Result<DefectReport, PricingError> {
    let (dollar, euro) = simulate_pair(model, cfg)?;
    defect_on_batches(model, &dollar, &euro)
}

pub fn defect_on_batches(model: &DiffusionModel, dollar: &Batch, euro: &Batch) -> Result<DefectReport, PricingError> {
    check_batches(dollar, euro)?;
    let x0 = model.x0;
    let defect = estimate_signed(dollar, |s| x0 - s.x_t.to_f64())?;
    let dual_mass = estimate(euro, |s| RealValue::one().when(s.hit_infinity))?.scaled(x0);
    let z = z_score(defect.mean - dual_mass.mean, defect.stderr.hypot(dual_mass.stderr));
    Ok(DefectReport {
        defect,
        dual_mass,
        z,
        strict: defect.mean > 3.0 * defect.stderr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPoint {
    pub n: usize,
    pub level: f64,
    pub running_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDiagnostic {
    pub claim: String,
    pub points: Vec<TailPoint>,
    pub increasing: bool,
}

/// Running means of `D€` on the first `n` `Q€` paths with `X_T` localized at
/// `n · x0`: absorbed paths count at that level, finite ones are capped there.
/// A mean that keeps growing with `n` hints at an infinite expectation.
/// Advisory only.
pub fn tail_diagnostic(
    model: &DiffusionModel,
    claim: &Claim,
    ns: &[usize],
    seed: u64,
    steps: usize,
    scheme: crate::sde::Scheme,
) -> Result<TailDiagnostic, PricingError> {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let cfg = SimConfig {
        n: n_max,
        steps,
        seed,
        scheme,
    };
    let euro = simulate(model, Measure::Euro, &cfg)?;
    Ok(tail_on_batch(model.x0, claim, ns, &euro))
}

pub fn tail_on_batch(x0: f64, claim: &Claim, ns: &[usize], euro: &Batch) -> TailDiagnostic {
    let points: Vec<TailPoint> = ns
        .iter()
        .map(|&n| {
            let n = n.min(euro.len());
            let level = n as f64 * x0;
            let sum: f64 = euro.samples[..n]
                .iter()
                .map(|s| {
                    let x = match s.x_t {
                        RealValue::Infinite => level,
                        ref v => v.to_f64().min(level),
                    };
                    claim.d_euro(&RealValue::from_f64(x).unwrap_or(RealValue::Zero)).to_f64()
                })
                .sum();
            TailPoint {
                n,
                level,
                running_mean: sum / n.max(1) as f64,
            }
        })
        .collect();
    let increasing = points.windows(2).all(|w| w[1].running_mean > w[0].running_mean);
    TailDiagnostic {
        claim: claim.label(),
        points,
        increasing,
    }
}
