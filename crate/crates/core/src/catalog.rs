//! Named diffusion models with exact samplers and closed-form references.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::pricing::ClaimKind;
use crate::sde::{DiffusionModel, ExactScheme, Integrability, VolFn};

pub const MODEL_NAMES: [&str; 5] = [
    "recip_bessel",
    "stopped_bm",
    "singular_timechange",
    "exp_martingale_baseline",
    "qnv(a,b,c)",
];

/// Volatility of the lognormal baseline unless overridden.
pub const BASELINE_VOL: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown model {0:?}; known models: recip_bessel, stopped_bm, singular_timechange, exp_martingale_baseline, qnv(a,b,c)")]
    UnknownModel(String),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Undiscounted call on a lognormal forward.
pub fn black_call(x0: f64, k: f64, vol: f64, horizon: f64) -> f64 {
    if k <= 0.0 {
        return x0;
    }
    let s = vol * horizon.sqrt();
    if s == 0.0 {
        return (x0 - k).max(0.0);
    }
    let d1 = ((x0 / k).ln() + 0.5 * s * s) / s;
    x0 * normal_cdf(d1) - k * normal_cdf(d1 - s)
}

#[derive(Clone)]
pub struct CatalogEntry {
    pub model: DiffusionModel,
    /// Closed-form values at the entry's `x0` and horizon.
    pub references: BTreeMap<&'static str, f64>,
    /// Hand-derived volatility of `Y = 1/X` under `Q€`, when known.
    pub dual_sigma: Option<VolFn>,
    pub notes: &'static str,
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("model", &self.model)
            .field("references", &self.references)
            .field("notes", &self.notes)
            .finish_non_exhaustive()
    }
}

impl CatalogEntry {
    pub fn reference(&self, key: &str) -> Option<f64> {
        self.references.get(key).copied()
    }
}

fn flags(self_quantoed: Integrability, rest: Integrability) -> BTreeMap<ClaimKind, Integrability> {
    ClaimKind::ALL
        .into_iter()
        .map(|k| (k, if k == ClaimKind::SelfQuantoed { self_quantoed } else { rest }))
        .collect()
}

fn positive(what: &str, v: f64) -> Result<f64, CatalogError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CatalogError::InvalidParameter(format!("{what} must be positive and finite, got {v}")))
    }
}

/// Model with `x0 = 1` and horizon `1`.
pub fn get_model(name: &str) -> Result<CatalogEntry, CatalogError> {
    get_model_with(name, 1.0, 1.0)
}

pub fn get_model_with(name: &str, x0: f64, horizon: f64) -> Result<CatalogEntry, CatalogError> {
    let x0 = positive("x0", x0)?;
    let t = positive("horizon", horizon)?;
    let sq = t.sqrt();
    let mut refs = BTreeMap::new();
    let entry = match name.trim() {
        "recip_bessel" => {
            let mut m = DiffusionModel::new("recip_bessel", x0, t, Arc::new(|x: f64, _| x * x));
            m.exact_scheme = Some(ExactScheme::ReciprocalBessel);
            m.dual_payoff_flags = flags(Integrability::Nonintegrable, Integrability::Integrable);
            let absorbed = 2.0 * normal_cdf(-1.0 / (x0 * sq));
            refs.insert("expected_x", x0 * (1.0 - absorbed));
            refs.insert("dual_absorption", absorbed);
            refs.insert("dollar_absorption", 0.0);
            CatalogEntry {
                model: m,
                references: refs,
                dual_sigma: Some(Arc::new(|_, _| 1.0)),
                notes: "X = 1/|BES3|; 1/X is Brownian motion absorbed at zero under Q€",
            }
        }
        "stopped_bm" => {
            let mut m = DiffusionModel::new("stopped_bm", x0, t, Arc::new(|_, _| 1.0));
            m.zero_attainable = true;
            m.exact_scheme = Some(ExactScheme::StoppedBm);
            m.dual_payoff_flags = flags(Integrability::Integrable, Integrability::Integrable);
            refs.insert("expected_x", x0);
            refs.insert("dual_absorption", 0.0);
            refs.insert("dollar_absorption", 2.0 * normal_cdf(-x0 / sq));
            CatalogEntry {
                model: m,
                references: refs,
                dual_sigma: Some(Arc::new(|y: f64, _| y * y)),
                notes: "Brownian motion stopped at zero; 1/X is a reciprocal BES3 under Q€",
            }
        }
        "singular_timechange" => {
            let mut m = DiffusionModel::new(
                "singular_timechange",
                x0,
                t,
                Arc::new(move |_, s: f64| 1.0 / (t - s).sqrt()),
            );
            m.zero_attainable = true;
            m.exact_scheme = Some(ExactScheme::SingularTimeChange);
            m.dual_payoff_flags = flags(Integrability::Nonintegrable, Integrability::Integrable);
            refs.insert("expected_x", 0.0);
            refs.insert("dual_absorption", 1.0);
            refs.insert("dollar_absorption", 1.0);
            CatalogEntry {
                model: m,
                references: refs,
                dual_sigma: Some(Arc::new(move |y: f64, s: f64| y * y / (t - s).sqrt())),
                notes: "Brownian motion run on the clock log(T/(T-t)); Q$ and Q€ are singular",
            }
        }
        "exp_martingale_baseline" => return lognormal(x0, t, BASELINE_VOL),
        other => match parse_call(other, "exp_martingale_baseline")? {
            Some(args) if args.len() == 1 => return lognormal(x0, t, positive("volatility", args[0])?),
            Some(_) => {
                return Err(CatalogError::InvalidParameter(
                    "exp_martingale_baseline takes one volatility".into(),
                ))
            }
            None => match parse_call(other, "qnv")? {
                Some(args) if args.len() == 3 => qnv(x0, t, args[0], args[1], args[2]),
                Some(_) => return Err(CatalogError::InvalidParameter("qnv takes three coefficients".into())),
                None => return Err(CatalogError::UnknownModel(name.to_string())),
            },
        },
    };
    Ok(entry)
}

fn lognormal(x0: f64, t: f64, vol: f64) -> Result<CatalogEntry, CatalogError> {
    let mut m = DiffusionModel::new("exp_martingale_baseline", x0, t, Arc::new(move |x: f64, _| vol * x));
    m.exact_scheme = Some(ExactScheme::Lognormal { vol });
    m.dual_payoff_flags = flags(Integrability::Integrable, Integrability::Integrable);
    let mut refs = BTreeMap::new();
    refs.insert("expected_x", x0);
    refs.insert("dual_absorption", 0.0);
    refs.insert("dollar_absorption", 0.0);
    refs.insert("atm_call", black_call(x0, x0, vol, t));
    refs.insert("volatility", vol);
    Ok(CatalogEntry {
        model: m,
        references: refs,
        dual_sigma: Some(Arc::new(move |y: f64, _| vol * y)),
        notes: "geometric Brownian motion, a true martingale under both measures",
    })
}

fn qnv(x0: f64, t: f64, a: f64, b: f64, c: f64) -> CatalogEntry {
    let mut m = DiffusionModel::new(
        format!("qnv({a},{b},{c})"),
        x0,
        t,
        Arc::new(move |x: f64, _| (a * x * x + b * x + c).abs()),
    );
    m.zero_attainable = c != 0.0;
    m.dual_payoff_flags = flags(Integrability::Unknown, Integrability::Unknown);
    CatalogEntry {
        model: m,
        references: BTreeMap::new(),
        dual_sigma: Some(Arc::new(move |y: f64, _| (a + b * y + c * y * y).abs())),
        notes: "quadratic normal volatility; Euler scheme only",
    }
}

/// Parses `prefix(v1,v2,...)` into its numeric arguments.
fn parse_call(s: &str, prefix: &str) -> Result<Option<Vec<f64>>, CatalogError> {
    let Some(body) = s.strip_prefix(prefix).and_then(|r| r.strip_prefix('(')) else {
        return Ok(None);
    };
    let body = body
        .strip_suffix(')')
        .ok_or_else(|| CatalogError::InvalidParameter(format!("unclosed parenthesis in {s:?}")))?;
    body.split(',')
        .map(|a| {
            let a = a.trim();
            a.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CatalogError::InvalidParameter(format!("bad coefficient {a:?} in {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

/// Default entries for every named model, plus `qnv(1,0,0)`.
pub fn list() -> Vec<CatalogEntry> {
    ["recip_bessel", "stopped_bm", "singular_timechange", "exp_martingale_baseline", "qnv(1,0,0)"]
        .into_iter()
        .map(|n| get_model(n).expect("catalog names resolve"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::derive_dual_model;

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((2.0 * normal_cdf(-1.0) - 0.317_310_507_862_914_1).abs() < 1e-15);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
    }

    #[test]
    fn resolves_names() {
        for n in ["recip_bessel", "stopped_bm", "singular_timechange", "exp_martingale_baseline"] {
            assert_eq!(get_model(n).unwrap().model.name, n);
        }
        let q = get_model("qnv(1, 0, 0)").unwrap();
        assert_eq!(q.model.sigma(2.0, 0.0), 4.0);
        assert!(q.model.exact_scheme.is_none());
        assert_eq!(q.model.flag(ClaimKind::Call), Integrability::Unknown);
        let v = get_model("exp_martingale_baseline(0.5)").unwrap();
        assert_eq!(v.reference("volatility"), Some(0.5));
        assert!(matches!(get_model("heston"), Err(CatalogError::UnknownModel(_))));
        assert!(matches!(get_model("qnv(1,2)"), Err(CatalogError::InvalidParameter(_))));
        assert!(matches!(get_model("qnv(1,x,2)"), Err(CatalogError::InvalidParameter(_))));
        assert!(get_model_with("recip_bessel", -1.0, 1.0).is_err());
    }

    #[test]
    fn hand_derived_duals_match() {
        for n in ["recip_bessel", "stopped_bm", "singular_timechange", "exp_martingale_baseline", "qnv(0.3,-1,2)"] {
            let e = get_model_with(n, 1.7, 2.0).unwrap();
            let derived = derive_dual_model(&e.model);
            let hand = e.dual_sigma.clone().unwrap();
            for y in [0.01, 0.4, 1.0, 3.0, 50.0] {
                for t in [0.0, 0.5, 1.9] {
                    let (a, b) = (derived.sigma_y(y, t), hand(y, t));
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{n} at ({y},{t}): {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn recip_bessel_reference_splits_forward() {
        let e = get_model("recip_bessel").unwrap();
        let total = e.reference("expected_x").unwrap() + e.reference("dual_absorption").unwrap();
        assert!((total - 1.0).abs() < 1e-15);
        assert!((e.reference("expected_x").unwrap() - 0.682_689_492_137_085_9).abs() < 1e-15);
    }

    #[test]
    fn black_call_limits() {
        assert!((black_call(1.0, 1.0, 0.2, 1.0) - 0.079_655_674_554_058).abs() < 1e-12);
        assert_eq!(black_call(1.0, 0.0, 0.2, 1.0), 1.0);
        assert!(black_call(1.0, 1e6, 0.2, 1.0) < 1e-12);
    }
}
