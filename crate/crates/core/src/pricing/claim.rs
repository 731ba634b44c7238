use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PricingError;
use crate::extended::{Extended, RealValue};

/// Terminal payoff families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    EuroForward,
    Call,
    Put,
    DollarCall,
    DollarPut,
    SelfQuantoed,
    DigitalExplosion,
}

impl ClaimKind {
    pub const ALL: [ClaimKind; 7] = [
        ClaimKind::EuroForward,
        ClaimKind::Call,
        ClaimKind::Put,
        ClaimKind::DollarCall,
        ClaimKind::DollarPut,
        ClaimKind::SelfQuantoed,
        ClaimKind::DigitalExplosion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClaimKind::EuroForward => "euro_forward",
            ClaimKind::Call => "call",
            ClaimKind::Put => "put",
            ClaimKind::DollarCall => "dollar_call",
            ClaimKind::DollarPut => "dollar_put",
            ClaimKind::SelfQuantoed => "self_quantoed",
            ClaimKind::DigitalExplosion => "digital_explosion",
        }
    }

    pub fn needs_strike(self) -> bool {
        !matches!(self, ClaimKind::EuroForward | ClaimKind::DigitalExplosion)
    }
}

impl fmt::Display for ClaimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClaimKind {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClaimKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PricingError::Config(format!("unknown claim kind {s:?}")))
    }
}

/// A pair of payoffs `(D$, D€)` depending on the terminal exchange rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub kind: ClaimKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
}

impl Claim {
    pub fn new(kind: ClaimKind, strike: Option<f64>) -> Result<Self, PricingError> {
        match (kind.needs_strike(), strike) {
            (true, None) => Err(PricingError::Config(format!("{kind} needs a strike"))),
            (true, Some(k)) if !(k >= 0.0 && k.is_finite()) => {
                Err(PricingError::Config(format!("strike {k} must be finite and nonnegative")))
            }
            (false, Some(_)) => Err(PricingError::Config(format!("{kind} takes no strike"))),
            _ => Ok(Claim { kind, strike }),
        }
    }

    pub fn euro_forward() -> Self {
        Claim {
            kind: ClaimKind::EuroForward,
            strike: None,
        }
    }

    pub fn call(k: f64) -> Self {
        Claim::new(ClaimKind::Call, Some(k)).expect("valid strike")
    }

    pub fn put(k: f64) -> Self {
        Claim::new(ClaimKind::Put, Some(k)).expect("valid strike")
    }

    pub fn dollar_call(k: f64) -> Self {
        Claim::new(ClaimKind::DollarCall, Some(k)).expect("valid strike")
    }

    pub fn dollar_put(k: f64) -> Self {
        Claim::new(ClaimKind::DollarPut, Some(k)).expect("valid strike")
    }

    pub fn self_quantoed(k: f64) -> Self {
        Claim::new(ClaimKind::SelfQuantoed, Some(k)).expect("valid strike")
    }

    pub fn digital_explosion() -> Self {
        Claim {
            kind: ClaimKind::DigitalExplosion,
            strike: None,
        }
    }

    /// Parses `"euro_forward"`, `"digital_explosion"` or `"<kind>_<strike>"`
    /// such as `"call_1.5"`.
    pub fn parse(s: &str) -> Result<Self, PricingError> {
        if let Ok(kind) = s.parse::<ClaimKind>() {
            return Claim::new(kind, None);
        }
        let (kind, k) = s
            .rsplit_once('_')
            .ok_or_else(|| PricingError::Config(format!("cannot parse claim {s:?}")))?;
        let kind: ClaimKind = kind.parse()?;
        let k: f64 = k
            .parse()
            .map_err(|_| PricingError::Config(format!("bad strike in claim {s:?}")))?;
        Claim::new(kind, Some(k))
    }

    pub fn label(&self) -> String {
        match self.strike {
            Some(k) => format!("{}_{k}", self.kind),
            None => self.kind.to_string(),
        }
    }

    fn k(&self) -> f64 {
        self.strike.unwrap_or(0.0)
    }

    /// Dollar payoff at the terminal state `x`.
    pub fn d_dollar(&self, x: &RealValue) -> RealValue {
        let k = self.k();
        match self.kind {
            ClaimKind::EuroForward => x.clone(),
            ClaimKind::Call => x.minus_floor(&k),
            ClaimKind::Put => x.floor_minus(&k),
            ClaimKind::DollarCall => x.scale(&k).floor_minus(&1.0),
            ClaimKind::DollarPut => x.scale(&k).minus_floor(&1.0),
            ClaimKind::SelfQuantoed => x.clone() * x.minus_floor(&k),
            ClaimKind::DigitalExplosion => Extended::Zero,
        }
    }

    /// Euro payoff at the terminal state `x`.
    pub fn d_euro(&self, x: &RealValue) -> RealValue {
        let k = self.k();
        match self.kind {
            ClaimKind::EuroForward => RealValue::one(),
            ClaimKind::Call => x.recip().scale(&k).floor_minus(&1.0),
            ClaimKind::Put => x.recip().scale(&k).minus_floor(&1.0),
            ClaimKind::DollarCall => x.recip().minus_floor(&k),
            ClaimKind::DollarPut => x.recip().floor_minus(&k),
            ClaimKind::SelfQuantoed => x.minus_floor(&k),
            ClaimKind::DigitalExplosion => RealValue::one().when(x.is_infinite()),
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
