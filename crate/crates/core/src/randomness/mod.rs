//! Randomness indicators: the NIST subset, Lempel-Ziv complexity, the Hurst
//! exponent and the set-level verdict.

pub mod complexity;
pub mod hurst;
pub mod nist;

use thiserror::Error;

pub use complexity::{lz76_phrase_count, normalized_complexity, ComplexityResult};
pub use hurst::{hurst_exponent, HurstResult};
pub use nist::nist_battery;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RandomnessError {
    #[error("sequence too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("sequence too long for this implementation: {0}")]
    TooLong(usize),
    #[error("input is not a bit sequence")]
    NotBinary,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Result of one statistical test on one series.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub test_name: String,
    /// Labelled p-values; empty when the test is inapplicable or reports a
    /// statistic only.
    pub p_values: Vec<(String, f64)>,
    pub statistic: Option<f64>,
    pub applicable: bool,
    /// `None` when not applicable.
    pub pass: Option<bool>,
    pub details: Vec<(String, f64)>,
    pub note: Option<String>,
    /// Significance level the p-values were judged against.
    pub alpha: Option<f64>,
}

impl TestOutcome {
    pub fn from_p(name: &str, p_values: Vec<(&str, f64)>, alpha: f64) -> Self {
        let pass = p_values.iter().all(|(_, p)| *p >= alpha);
        Self {
            test_name: name.to_string(),
            p_values: p_values
                .into_iter()
                .map(|(l, p)| (l.to_string(), p.clamp(0.0, 1.0)))
                .collect(),
            statistic: None,
            applicable: true,
            pass: Some(pass),
            details: Vec::new(),
            note: None,
            alpha: Some(alpha),
        }
    }

    /// Statistic-only outcome with an explicit verdict.
    pub fn from_statistic(name: &str, statistic: f64, pass: bool) -> Self {
        Self {
            test_name: name.to_string(),
            p_values: Vec::new(),
            statistic: Some(statistic),
            applicable: true,
            pass: Some(pass),
            details: Vec::new(),
            note: None,
            alpha: None,
        }
    }

    pub fn inapplicable(name: &str, reason: &str) -> Self {
        Self {
            test_name: name.to_string(),
            p_values: Vec::new(),
            statistic: None,
            applicable: false,
            pass: None,
            details: Vec::new(),
            note: Some(reason.to_string()),
            alpha: None,
        }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.push((key.to_string(), value));
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn failed(&self) -> bool {
        self.applicable && self.pass == Some(false)
    }

    /// One CSV row per p-value (or one for a statistic or inapplicable test):
    /// `series_id,test,applicable,p_or_stat,pass`.
    pub fn csv_rows(&self, series_id: &str, prefix: &str) -> Vec<String> {
        let name = if prefix.is_empty() {
            self.test_name.clone()
        } else {
            format!("{prefix}.{}", self.test_name)
        };
        let pass = match self.pass {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        if !self.applicable {
            return vec![format!("{series_id},{name},0,,")];
        }
        if self.p_values.is_empty() {
            let stat = self.statistic.map(|s| format!("{s}")).unwrap_or_default();
            return vec![format!("{series_id},{name},1,{stat},{pass}")];
        }
        let single = self.p_values.len() == 1;
        self.p_values
            .iter()
            .map(|(label, p)| {
                let row_name = if single {
                    name.clone()
                } else {
                    format!("{name}.{label}")
                };
                let row_pass = match self.alpha {
                    Some(a) => {
                        if *p >= a {
                            "1"
                        } else {
                            "0"
                        }
                    }
                    None => pass,
                };
                format!("{series_id},{row_name},1,{p},{row_pass}")
            })
            .collect()
    }
}

/// A series is rejected when at least one applicable test failed.
pub fn series_rejected_by_nist(outcomes: &[TestOutcome]) -> bool {
    outcomes.iter().any(TestOutcome::failed)
}

/// Mean, dispersion and the literal randomness verdict of a set statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetVerdict {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub dispersion: f64,
    /// `|mean - ideal| <= dispersion`.
    pub random: bool,
}

pub fn set_verdict(values: &[f64], ideal: f64) -> Option<SetVerdict> {
    if values.is_empty() {
        return None;
    }
    let mean = crate::stats::mean(values);
    let dispersion = crate::stats::sample_std(values);
    Some(SetVerdict {
        mean,
        dispersion,
        random: (mean - ideal).abs() <= dispersion,
    })
}
