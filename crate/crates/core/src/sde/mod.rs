//! Monte Carlo simulation of `X` under `Q$` and of `Y = 1/X` under `Q€`.
//!
//! Each path draws from its own ChaCha stream, so batches are bit-identical
//! for a given seed whatever the thread count. Explosion of `X` is never
//! detected on the `Q$` side; it shows up only as absorption of `Y` at zero.

mod estimate;
mod model;
mod rng;
mod simulate;

use thiserror::Error;

use crate::lattice::Measure;

pub use estimate::{
    cross_measure_check, cross_measure_on, estimate, estimate_signed, values_of, z_score,
    CrossMeasure, Estimate,
};
pub use model::{derive_dual_model, DiffusionModel, DualDiffusion, ExactScheme, Integrability, VolFn};
pub use rng::path_rng;
pub use simulate::{simulate, Batch, Scheme, SimConfig, TerminalSample, BLOWUP_GUARD};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("scheme {scheme} is not available for model {model}")]
    SchemeUnsupported { scheme: String, model: String },
    #[error("path {path} left the representable range at step {step} (value {value})")]
    NumericalBlowup { path: usize, step: usize, value: f64 },
    #[error("functional is infinite on path {path}")]
    InfiniteContribution { path: usize },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("path {path} under {measure:?} reached a state that measure does not charge")]
    DualNullViolation { path: usize, measure: Measure },
}
