//! Sliding-window decoding of quantum memory experiments with BP+LSD as
//! the inner decoder, plus confidence-driven adaptive window sizing.
//!
//! The numeric core is generic over the [`Real`] scalar (`f32` or `f64`);
//! the `*64` / `*32` aliases below pin the common instantiations.

pub mod adaptive;
pub mod bp;
pub mod codes;
pub mod gf2;
pub mod harness;
pub mod lsd;
mod scalar;
pub mod window;

pub use scalar::{llr, Real};

use thiserror::Error;

/// Errors raised by the inner decoders and the window engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid decoder configuration: {0}")]
    Config(String),
    #[error("syndrome is not explainable by the model: {0}")]
    Unsolvable(String),
}

pub type DetectorModel64 = codes::DetectorModel<f64>;
pub type DetectorModel32 = codes::DetectorModel<f32>;
pub type BpConfig64 = bp::BpConfig<f64>;
pub type BpResult64 = bp::BpResult<f64>;
pub type ClusterStats64 = lsd::ClusterStats<f64>;
pub type HypertunerState64 = adaptive::HypertunerState<f64>;
pub type AdaptiveConfig64 = adaptive::AdaptiveConfig<f64>;
pub type BpLsdDecoder64 = window::BpLsdDecoder<f64>;
pub type WindowRecord64 = window::WindowRecord<f64>;
