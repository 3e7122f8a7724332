//! Hurst exponent by rescaled-range (R/S) analysis.
//!
//! The mean R/S of non-overlapping windows is computed for logarithmically
//! spaced window sizes. Raw R/S is biased upward for short windows, so the
//! exponent is the slope of `log(R/S) - log(E[R/S])` against `log(size)` plus
//! one half, where `E[R/S]` is the Anis-Lloyd expectation for i.i.d. data with
//! the Peters small-sample factor. The uncorrected slope is reported too.

use super::RandomnessError;
use crate::stats;

pub const ESTIMATOR: &str = "R/S (Anis-Lloyd-Peters corrected)";
pub const MIN_LENGTH: usize = 512;
const MIN_WINDOW: usize = 16;
const N_SIZES: usize = 16;
/// Raw slopes above this are treated as a trend rather than persistence.
const TREND_SLOPE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct HurstResult {
    pub h: f64,
    pub slope_std_err: f64,
    /// Slope of the uncorrected `log(R/S)` fit.
    pub raw_slope: f64,
    pub window_sizes: Vec<usize>,
    pub rs_means: Vec<f64>,
    /// Set when the series looks like a deterministic trend.
    pub degenerate_fit: bool,
}

/// Mean R/S over the non-overlapping windows of `size`; windows with zero
/// spread are skipped.
fn mean_rescaled_range(values: &[f64], size: usize) -> Option<f64> {
    let mut total = 0.0;
    let mut used = 0usize;
    for w in values.chunks_exact(size) {
        let m = stats::mean(w);
        let (mut cum, mut lo, mut hi, mut ss) = (0.0f64, 0.0f64, 0.0f64, 0.0);
        for &x in w {
            let d = x - m;
            cum += d;
            lo = lo.min(cum);
            hi = hi.max(cum);
            ss += d * d;
        }
        let s = (ss / size as f64).sqrt();
        if s > 0.0 {
            total += (hi - lo) / s;
            used += 1;
        }
    }
    (used > 0).then(|| total / used as f64)
}

/// Expected R/S of an i.i.d. sequence of length `n`.
pub fn expected_rescaled_range(n: usize) -> f64 {
    let nf = n as f64;
    let sum: f64 = (1..n).map(|i| ((nf - i as f64) / i as f64).sqrt()).sum();
    let gamma_ratio = if n <= 340 {
        let lg = statrs::function::gamma::ln_gamma;
        (lg((nf - 1.0) / 2.0) - lg(nf / 2.0)).exp() / std::f64::consts::PI.sqrt()
    } else {
        1.0 / (nf * std::f64::consts::FRAC_PI_2).sqrt()
    };
    (nf - 0.5) / nf * gamma_ratio * sum
}

fn window_sizes(n: usize) -> Vec<usize> {
    let hi = n / 4;
    let (l0, l1) = ((MIN_WINDOW as f64).ln(), (hi as f64).ln());
    let mut sizes: Vec<usize> = (0..N_SIZES)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (N_SIZES - 1) as f64).exp().round() as usize)
        .collect();
    sizes.dedup();
    sizes
}

pub fn hurst_exponent(values: &[f64]) -> Result<HurstResult, RandomnessError> {
    if values.len() < MIN_LENGTH {
        return Err(RandomnessError::TooShort {
            needed: MIN_LENGTH,
            got: values.len(),
        });
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(RandomnessError::Degenerate(
            "constant series has no Hurst exponent".into(),
        ));
    }
    let mut sizes = Vec::new();
    let mut rs_means = Vec::new();
    for size in window_sizes(values.len()) {
        if let Some(rs) = mean_rescaled_range(values, size) {
            sizes.push(size);
            rs_means.push(rs);
        }
    }
    let log_size: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let log_rs: Vec<f64> = rs_means.iter().map(|r| r.ln()).collect();
    let corrected: Vec<f64> = log_rs
        .iter()
        .zip(&sizes)
        .map(|(l, &s)| l - expected_rescaled_range(s).ln())
        .collect();
    let raw = stats::line_fit(&log_size, &log_rs)
        .ok_or_else(|| RandomnessError::Degenerate("too few usable window sizes".into()))?;
    let fit = stats::line_fit(&log_size, &corrected)
        .ok_or_else(|| RandomnessError::Degenerate("too few usable window sizes".into()))?;
    Ok(HurstResult {
        h: 0.5 + fit.slope,
        slope_std_err: fit.slope_std_err,
        raw_slope: raw.slope,
        window_sizes: sizes,
        rs_means,
        degenerate_fit: raw.slope >= TREND_SLOPE,
    })
}
