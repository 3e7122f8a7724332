//! Unit-root (ADF) and stationarity (KPSS) tests, both reported as a 0/1
//! indicator at the 5% level.
//!
//! ADF: indicator 1 means the unit root is rejected. KPSS: indicator 1 means
//! stationarity is rejected.

pub mod adf;
pub mod kpss;

use thiserror::Error;

pub use adf::adf_test;
pub use kpss::kpss_test;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StationarityError {
    #[error("series too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Adf,
    Kpss,
}

impl TestKind {
    pub fn label(self) -> &'static str {
        match self {
            TestKind::Adf => "adf",
            TestKind::Kpss => "kpss",
        }
    }
}

/// Critical values at the 1%, 5% and 10% levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValues {
    pub one: f64,
    pub five: f64,
    pub ten: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityOutcome {
    pub test: TestKind,
    pub statistic: f64,
    /// ADF augmentation order or KPSS bandwidth.
    pub lag_or_bandwidth: usize,
    pub indicator: u8,
    pub critical_values: CriticalValues,
    pub nobs: usize,
}
