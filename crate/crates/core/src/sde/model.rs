use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::pricing::ClaimKind;

/// Volatility function `(state, time) -> sigma`.
pub type VolFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Whether `E€[D€ 1{X_T = ∞}]` is finite for a claim family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    Integrable,
    Nonintegrable,
    Unknown,
}

/// Samplers that draw the terminal state without time stepping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactScheme {
    /// `X = 1/|BES3|` under `Q$`; `1/X` is Brownian motion absorbed at zero under `Q€`.
    ReciprocalBessel,
    /// `X` is Brownian motion absorbed at zero under `Q$`; `1/X` is a reciprocal BES3 under `Q€`.
    StoppedBm,
    /// Deterministic time change `u(t) = log(T / (T − t))` of a stopped Brownian motion.
    SingularTimeChange,
    /// Lognormal with the given volatility under both measures.
    Lognormal { vol: f64 },
    /// `sigma ≡ 0`.
    Constant,
}

impl ExactScheme {
    pub fn name(&self) -> &'static str {
        match self {
            ExactScheme::ReciprocalBessel => "recip_bessel",
            ExactScheme::StoppedBm => "stopped_bm",
            ExactScheme::SingularTimeChange => "singular_timechange",
            ExactScheme::Lognormal { .. } => "lognormal",
            ExactScheme::Constant => "constant",
        }
    }
}

/// Driftless diffusion `dX = sigma(X, t) dW` for the exchange rate under `Q$`.
#[derive(Clone)]
pub struct DiffusionModel {
    pub name: String,
    pub sigma: VolFn,
    pub x0: f64,
    pub horizon: f64,
    pub zero_attainable: bool,
    pub dual_payoff_flags: BTreeMap<ClaimKind, Integrability>,
    pub exact_scheme: Option<ExactScheme>,
}

impl fmt::Debug for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionModel")
            .field("name", &self.name)
            .field("x0", &self.x0)
            .field("horizon", &self.horizon)
            .field("zero_attainable", &self.zero_attainable)
            .field("exact_scheme", &self.exact_scheme)
            .finish_non_exhaustive()
    }
}

impl DiffusionModel {
    pub fn new(name: impl Into<String>, x0: f64, horizon: f64, sigma: VolFn) -> Self {
        DiffusionModel {
            name: name.into(),
            sigma,
            x0,
            horizon,
            zero_attainable: false,
            dual_payoff_flags: BTreeMap::new(),
            exact_scheme: None,
        }
    }

    pub fn sigma(&self, x: f64, t: f64) -> f64 {
        (self.sigma)(x, t)
    }

    pub fn flag(&self, kind: ClaimKind) -> Integrability {
        self.dual_payoff_flags
            .get(&kind)
            .copied()
            .unwrap_or(Integrability::Unknown)
    }
}

/// Diffusion of `Y = 1/X` under `Q€`: `dY = y² sigma(1/y, t) dW`.
#[derive(Clone)]
pub struct DualDiffusion {
    pub sigma_y: VolFn,
    pub y0: f64,
    pub horizon: f64,
}

impl fmt::Debug for DualDiffusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DualDiffusion")
            .field("y0", &self.y0)
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl DualDiffusion {
    pub fn sigma_y(&self, y: f64, t: f64) -> f64 {
        (self.sigma_y)(y, t)
    }
}

pub fn derive_dual_model(model: &DiffusionModel) -> DualDiffusion {
    let sigma = model.sigma.clone();
    DualDiffusion {
        sigma_y: Arc::new(move |y, t| y * y * sigma(1.0 / y, t)),
        y0: 1.0 / model.x0,
        horizon: model.horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> impl Iterator<Item = (f64, f64)> {
        [0.05, 0.3, 1.0, 2.5, 17.0]
            .into_iter()
            .flat_map(|y| [0.0, 0.25, 0.9].into_iter().map(move |t| (y, t)))
    }

    #[test]
    fn quadratic_volatility_dualizes_to_unit_volatility() {
        let m = DiffusionModel::new("q", 1.0, 1.0, Arc::new(|x, _| x * x));
        let d = derive_dual_model(&m);
        for (y, t) in grid() {
            assert!((d.sigma_y(y, t) - 1.0).abs() < 1e-12);
        }
        assert_eq!(d.y0, 1.0);
    }

    #[test]
    fn singular_volatility_dualizes_to_scaled_square() {
        let m = DiffusionModel::new("s", 2.0, 1.0, Arc::new(|_, t: f64| 1.0 / (1.0 - t).sqrt()));
        let d = derive_dual_model(&m);
        for (y, t) in grid() {
            let want = y * y / (1.0 - t).sqrt();
            assert!((d.sigma_y(y, t) - want).abs() <= 1e-12 * want);
        }
        assert_eq!(d.y0, 0.5);
    }

    #[test]
    fn linear_volatility_is_self_dual() {
        let m = DiffusionModel::new("l", 1.0, 1.0, Arc::new(|x, _| x));
        let d = derive_dual_model(&m);
        for (y, t) in grid() {
            assert!((d.sigma_y(y, t) - y).abs() <= 1e-12 * y);
        }
    }
}
