//! Spectrally shaped switching control for DC-DC converters.
//!
//! A finite-horizon predictive controller picks each switch state so the
//! spectrum of the recent switching sequence stays under a target envelope.
//! The spectrum is tracked incrementally with a sliding DFT.

pub mod analysis;
pub mod controller;
pub mod error;
pub mod filter;
pub mod pi;
pub mod plant;
pub mod pwm;
pub mod scenario;
pub mod sim;
pub mod spectrum;

pub use error::{Error, Result};
