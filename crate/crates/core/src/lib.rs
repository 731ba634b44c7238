//! Pricing and verification for exchange rates that may explode or devalue.
//!
//! The crate works with the pair of risk-neutral measures `Q$` (Dollar
//! numéraire) and `Q€` (Euro numéraire). The exchange rate `X` (Dollars per
//! Euro) may hit zero under `Q$` and infinity under `Q€`.

pub mod extended;
pub mod lattice;
pub mod physical;
pub mod catalog;
pub mod pricing;
pub mod sde;
