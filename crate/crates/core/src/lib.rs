//! Regime diagnostics for the CO2/GDP relationship.
//!
//! The pipeline estimates a time-varying emissions-to-output elasticity per
//! country, smooths it with a local-level state-space model, turns the
//! smoothed path into a chain of derivatives and quadratic "energies", and
//! clusters the pooled panel into three regimes (flow-dominant,
//! transitional, store-dominant). Forecasting models and early-warning
//! detectors are then evaluated conditionally on those regimes.

pub mod elasticity;
pub mod energetics;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod panel;
pub mod pipeline;
pub mod regime;
pub mod synth;

pub use error::{NeedError, Result};
