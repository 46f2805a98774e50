//! Code construction, noise models and detector error models.

mod css;
mod dem;
mod noise;
mod sample;

pub use css::{bb72, build_bb, build_repetition, build_toric, CssCode, Monomial, ToricLayout};
pub use dem::{
    build_memory_dem, memory_dem_with_rates, Basis, DemDocument, DetectorModel, FaultEntry,
};
pub use noise::{EffectiveRates, NoiseKind, NoiseModelSpec};
pub use sample::{sample_shot, shot_seed, Shot};

use thiserror::Error;

use crate::gf2::Gf2Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("invalid code or model: {0}")]
    Invalid(String),
    #[error("detector model document rejected: {0}")]
    Schema(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}
