use thiserror::Error;

/// Errors raised while configuring or running the spectral controller.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("filter segments overlap at {at} Hz")]
    OverlappingSegments { at: f64 },

    #[error("filter segments leave [{from}, {to}] Hz uncovered")]
    UncoveredRange { from: f64, to: f64 },

    #[error("{what} must be finite and non-negative, got {value}")]
    NegativeMagnitude { what: String, value: f64 },

    #[error("band [{lo}, {hi}] Hz lies outside (0, {nyquist}] Hz")]
    BandOutOfRange { lo: f64, hi: f64, nyquist: f64 },

    #[error("no gap with index {0}")]
    NoSuchGap(usize),

    #[error("trace too short: need at least {needed} samples, got {got}")]
    TraceTooShort { needed: usize, got: usize },

    #[error("frequency band [{lo}, {hi}] Hz contains no spectrum bins")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("spectrum has no identifiable peaks")]
    NoPeaks,
}

pub type Result<T> = std::result::Result<T, Error>;
