//! Separability of targets observed by binary proximity sensors.
//!
//! A sensor reads 1 when an occupied target lies strictly inside its sensing
//! radius. The crate provides deployments, identifiability analysis and
//! decoding, closed-form sensor-count thresholds, adversarial majority
//! decoding, and a seeded Monte Carlo engine for estimating success
//! probabilities.

pub mod adversarial;
mod error;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod scaling;
pub mod separability;

pub use error::{Error, Result};
