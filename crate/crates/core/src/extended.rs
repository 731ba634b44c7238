//! Points of the extended half-line `[0, ∞]`.
//!
//! Exchange-rate states, payoffs and wealth values all live here. Zero and
//! infinity are explicit tags so that absorbed states never pass through
//! floating point or rational division by zero. Multiplication follows the
//! measure-theoretic convention `∞ · 0 = 0`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A value in `[0, ∞]`. `Finite` always carries a strictly positive number.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Extended<T> {
    Zero,
    Finite(T),
    Infinite,
}

/// Exact extended value used on lattices.
pub type ExactValue = Extended<BigRational>;
/// Floating-point extended value used by the Monte Carlo engine.
pub type RealValue = Extended<f64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtendedError {
    #[error("value {0} is negative or not a number")]
    Negative(String),
    #[error("cannot parse extended value from {0:?}")]
    Parse(String),
}

/// Scalar types an [`Extended`] can carry.
pub trait Scalar:
    Clone
    + PartialOrd
    + Zero
    + One
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
}

impl<T> Scalar for T where
    T: Clone
        + PartialOrd
        + Zero
        + One
        + fmt::Debug
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
{
}

impl<T: Scalar> Extended<T> {
    /// Tags a nonnegative number; zero becomes [`Extended::Zero`].
    pub fn nonneg(v: T) -> Result<Self, ExtendedError> {
        if v.is_zero() {
            Ok(Extended::Zero)
        } else if v > T::zero() {
            Ok(Extended::Finite(v))
        } else {
            Err(ExtendedError::Negative(format!("{v:?}")))
        }
    }

    pub fn one() -> Self {
        Extended::Finite(T::one())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Extended::Zero)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    /// True for strictly positive, finite values.
    pub fn is_interior(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// The number itself, with zero mapped to `T::zero()`; `None` at infinity.
    pub fn to_finite(&self) -> Option<T> {
        match self {
            Extended::Zero => Some(T::zero()),
            Extended::Finite(v) => Some(v.clone()),
            Extended::Infinite => None,
        }
    }

    pub fn recip(&self) -> Self {
        match self {
            Extended::Zero => Extended::Infinite,
            Extended::Finite(v) => Extended::Finite(T::one() / v.clone()),
            Extended::Infinite => Extended::Zero,
        }
    }

    /// Multiplies by a nonnegative scalar weight, honouring `∞ · 0 = 0`.
    pub fn scale(&self, w: &T) -> Self {
        if w.is_zero() {
            return Extended::Zero;
        }
        match self {
            Extended::Zero => Extended::Zero,
            Extended::Finite(v) => Extended::Finite(v.clone() * w.clone()),
            Extended::Infinite => Extended::Infinite,
        }
    }

    /// `self` if `keep`, zero otherwise. Indicator multiplication.
    pub fn when(&self, keep: bool) -> Self {
        if keep {
            self.clone()
        } else {
            Extended::Zero
        }
    }

    /// Positive part of `self - k` for a nonnegative scalar `k`.
    pub fn minus_floor(&self, k: &T) -> Self {
        match self {
            Extended::Infinite => Extended::Infinite,
            _ => {
                let v = self.to_finite().unwrap_or_else(T::zero);
                if v > *k {
                    Extended::Finite(v - k.clone())
                } else {
                    Extended::Zero
                }
            }
        }
    }

    /// Positive part of `k - self` for a nonnegative scalar `k`.
    pub fn floor_minus(&self, k: &T) -> Self {
        match self {
            Extended::Infinite => Extended::Zero,
            _ => {
                let v = self.to_finite().unwrap_or_else(T::zero);
                if *k > v {
                    Extended::Finite(k.clone() - v)
                } else {
                    Extended::Zero
                }
            }
        }
    }
}

impl<T: Scalar> Mul for Extended<T> {
    type Output = Extended<T>;

    fn mul(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Extended::Zero, _) | (_, Extended::Zero) => Extended::Zero,
            (Extended::Infinite, _) | (_, Extended::Infinite) => Extended::Infinite,
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a * b),
        }
    }
}

impl<T: Scalar> Mul for &Extended<T> {
    type Output = Extended<T>;

    fn mul(self, rhs: Self) -> Extended<T> {
        self.clone() * rhs.clone()
    }
}

impl<T: Scalar> Div for Extended<T> {
    type Output = Extended<T>;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Scalar> Add for Extended<T> {
    type Output = Extended<T>;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Extended::Infinite, _) | (_, Extended::Infinite) => Extended::Infinite,
            (Extended::Zero, x) | (x, Extended::Zero) => x,
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
        }
    }
}

impl<T: Scalar> std::iter::Sum for Extended<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Extended::Zero, |acc, x| acc + x)
    }
}

impl<T: Scalar> PartialOrd for Extended<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Extended::Infinite, Extended::Infinite) | (Extended::Zero, Extended::Zero) => {
                Some(Ordering::Equal)
            }
            (Extended::Infinite, _) | (_, Extended::Zero) => Some(Ordering::Greater),
            (_, Extended::Infinite) | (Extended::Zero, _) => Some(Ordering::Less),
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl RealValue {
    /// Tags an `f64`; `+∞` maps to [`Extended::Infinite`].
    pub fn from_f64(v: f64) -> Result<Self, ExtendedError> {
        if v == f64::INFINITY {
            Ok(Extended::Infinite)
        } else if v.is_nan() {
            Err(ExtendedError::Negative(format!("{v}")))
        } else {
            Extended::nonneg(v)
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Zero => 0.0,
            Extended::Finite(v) => *v,
            Extended::Infinite => f64::INFINITY,
        }
    }
}

impl ExactValue {
    pub fn from_integer(n: i64) -> Result<Self, ExtendedError> {
        Extended::nonneg(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Result<Self, ExtendedError> {
        Extended::nonneg(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Zero => 0.0,
            Extended::Finite(v) => v.to_f64().unwrap_or(f64::NAN),
            Extended::Infinite => f64::INFINITY,
        }
    }
}

/// Parses `"p/q"`, `"p"` or a decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, ExtendedError> {
    let s = s.trim();
    let err = || ExtendedError::Parse(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(BigRational::new(n, d))
        }
        None => match s.split_once('.') {
            Some((int, frac)) if !frac.is_empty() && frac.bytes().all(|b| b.is_ascii_digit()) => {
                let digits = format!("{int}{frac}");
                let n: BigInt = digits.parse().map_err(|_| err())?;
                let d = num_traits::pow(BigInt::from(10), frac.len());
                Ok(BigRational::new(n, d))
            }
            Some(_) => Err(err()),
            None => {
                let n: BigInt = s.parse().map_err(|_| err())?;
                Ok(BigRational::from_integer(n))
            }
        },
    }
}

/// Renders a rational as `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl FromStr for ExactValue {
    type Err = ExtendedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(Extended::Infinite);
        }
        let r = parse_rational(t)?;
        if r.is_negative() {
            return Err(ExtendedError::Negative(t.to_string()));
        }
        Extended::nonneg(r)
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Zero => f.write_str("0"),
            Extended::Finite(v) => f.write_str(&format_rational(v)),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl fmt::Display for RealValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Zero => f.write_str("0"),
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExactValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter storing a [`BigRational`] as a `"p/q"` string.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}
