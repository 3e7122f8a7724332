//! Delay reconstruction, false-nearest-neighbour embedding dimension and the
//! largest Lyapunov exponent.

pub mod kdtree;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::stats;
use kdtree::KdTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("series too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate series: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

pub const MIN_DELAY_LENGTH: usize = 1000;
pub const RECOMMENDED_FNN_LENGTH: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayMethod {
    /// First lag with autocorrelation below 1/e.
    AcfThreshold,
    /// First local minimum of the autocorrelation.
    FirstMinimum,
    /// Neither rule applied; delay 1.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayChoice {
    pub delay: usize,
    pub method: DelayMethod,
}

fn check_series(values: &[f64], needed: usize) -> Result<()> {
    if values.len() < needed {
        return Err(DynamicsError::TooShort {
            needed,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::Degenerate("non-finite value".into()));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(DynamicsError::Degenerate("constant series".into()));
    }
    Ok(())
}

/// Biased sample autocorrelation for lags `0..=max_lag`, computed by FFT.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Vec<f64> {
    let n = values.len();
    let m = stats::mean(values);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .map(|&v| Complex::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    buf[..=max_lag.min(n - 1)].iter().map(|c| c.re / c0).collect()
}

/// Delay for the reconstruction: first lag where the autocorrelation drops
/// below 1/e, else its first local minimum, else 1.
pub fn choose_delay(values: &[f64]) -> Result<DelayChoice> {
    check_series(values, MIN_DELAY_LENGTH)?;
    let max_lag = values.len() / 4;
    let acf = autocorrelation(values, max_lag);
    let threshold = (-1.0f64).exp();
    if let Some(lag) = (1..acf.len()).find(|&k| acf[k] < threshold) {
        return Ok(DelayChoice {
            delay: lag,
            method: DelayMethod::AcfThreshold,
        });
    }
    if let Some(lag) = (1..acf.len().saturating_sub(1)).find(|&k| acf[k] < acf[k - 1] && acf[k] <= acf[k + 1]) {
        return Ok(DelayChoice {
            delay: lag,
            method: DelayMethod::FirstMinimum,
        });
    }
    Ok(DelayChoice {
        delay: 1,
        method: DelayMethod::Fallback,
    })
}

/// Delay vectors `(x_i, x_{i+delay}, ..., x_{i+(dim-1) delay})` for
/// `i < count`, flattened row-major.
pub fn embed(values: &[f64], dim: usize, delay: usize, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count * dim);
    for i in 0..count {
        for k in 0..dim {
            out.push(values[i + k * delay]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnnConfig {
    pub d_max: usize,
    pub r_tol: f64,
    pub a_tol: f64,
    /// Fraction below which a dimension counts as unfolded.
    pub threshold: f64,
    /// Only the leading `max_points` delay vectors are searched.
    pub max_points: usize,
}

impl Default for FnnConfig {
    fn default() -> Self {
        Self {
            d_max: 12,
            r_tol: 15.0,
            a_tol: 2.0,
            threshold: 0.01,
            max_points: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult {
    pub delay: usize,
    /// `fnn_fraction[d - 1]` is the fraction for dimension `d`.
    pub fnn_fraction: Vec<f64>,
    pub d_e: Option<usize>,
    pub compact_object_found: bool,
    pub points_used: usize,
    /// Set when the series is shorter than the recommended length.
    pub short_series: bool,
}

fn fnn_fraction_at(values: &[f64], dim: usize, delay: usize, r_a: f64, cfg: &FnnConfig) -> f64 {
    let count = values.len() - dim * delay;
    let pts = embed(values, dim, delay, count);
    let tree = KdTree::new(&pts, dim);
    let theiler = delay * dim;
    let mut false_nn = 0usize;
    let mut tested = 0usize;
    for i in 0..count {
        let Some((j, d2)) = tree.nearest_excluding(i, theiler) else {
            continue;
        };
        tested += 1;
        let rd = d2.sqrt();
        let extra = (values[i + dim * delay] - values[j + dim * delay]).abs();
        let ratio_false = if rd > 0.0 { extra / rd > cfg.r_tol } else { extra > 0.0 };
        let abs_false = (d2 + extra * extra).sqrt() / r_a > cfg.a_tol;
        if ratio_false || abs_false {
            false_nn += 1;
        }
    }
    if tested == 0 {
        1.0
    } else {
        false_nn as f64 / tested as f64
    }
}

/// False-nearest-neighbour estimate of the embedding dimension.
pub fn fnn_dimension(values: &[f64], delay: usize, cfg: &FnnConfig) -> Result<EmbeddingResult> {
    if delay == 0 || cfg.d_max == 0 {
        return Err(DynamicsError::Parameter("delay and d_max must be positive".into()));
    }
    let span = cfg.d_max * delay;
    check_series(values, span + 2 * span + 10)?;
    let usable = (cfg.max_points + span).min(values.len());
    let series = &values[..usable];
    let r_a = stats::population_std(series);
    if r_a == 0.0 {
        return Err(DynamicsError::Degenerate("constant leading segment".into()));
    }
    let fnn_fraction: Vec<f64> = (1..=cfg.d_max)
        .into_par_iter()
        .map(|d| fnn_fraction_at(series, d, delay, r_a, cfg))
        .collect();
    let d_e = fnn_fraction.iter().position(|&f| f < cfg.threshold).map(|i| i + 1);
    let compact_object_found = d_e.is_some_and(|d| fnn_fraction[d - 1..].iter().all(|&f| f < cfg.threshold));
    Ok(EmbeddingResult {
        delay,
        fnn_fraction,
        d_e,
        compact_object_found,
        points_used: usable - delay,
        short_series: values.len() < RECOMMENDED_FNN_LENGTH,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovConfig {
    /// Length of the followed divergence curve.
    pub max_steps: usize,
    /// Minimum temporal separation of neighbours; `None` uses `delay * dim`.
    pub theiler: Option<usize>,
    /// The fit stops once the curve has covered this share of its rise to
    /// the plateau.
    pub fit_fraction: f64,
    pub min_fit_points: usize,
    pub max_points: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            max_steps: 40,
            theiler: None,
            fit_fraction: 0.7,
            min_fit_points: 10,
            max_points: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovResult {
    /// Per-sample exponent; `None` when no linear region was found.
    pub lambda_max: Option<f64>,
    /// Inclusive range of divergence-curve steps used by the fit.
    pub fit_range: (usize, usize),
    pub slope_std_err: f64,
    pub r_squared: f64,
    /// Mean log divergence after `k` steps.
    pub divergence: Vec<f64>,
    pub indeterminate_reason: Option<String>,
}

/// Largest Lyapunov exponent from the mean log divergence of nearest
/// neighbours in the reconstructed space (Rosenstein's method).
pub fn largest_lyapunov(values: &[f64], d_e: usize, delay: usize, cfg: &LyapunovConfig) -> Result<LyapunovResult> {
    if d_e == 0 || delay == 0 || cfg.max_steps < 2 {
        return Err(DynamicsError::Parameter(
            "dimension, delay and steps must be positive".into(),
        ));
    }
    let span = (d_e - 1) * delay;
    check_series(values, span + cfg.max_steps + 100)?;
    let total = values.len() - span;
    let vectors = total.min(cfg.max_points + cfg.max_steps);
    let pts = embed(values, d_e, delay, vectors);
    let searchable = vectors - cfg.max_steps;
    let tree = KdTree::new(&pts[..searchable * d_e], d_e);
    let theiler = cfg.theiler.unwrap_or(delay * d_e);

    let k_len = cfg.max_steps + 1;
    let mut sums = vec![0.0; k_len];
    let mut counts = vec![0usize; k_len];
    for i in 0..searchable {
        let Some((j, d2)) = tree.nearest_excluding(i, theiler) else {
            continue;
        };
        if d2 == 0.0 {
            continue;
        }
        for k in 0..k_len {
            let a = &pts[(i + k) * d_e..(i + k + 1) * d_e];
            let b = &pts[(j + k) * d_e..(j + k + 1) * d_e];
            let dist2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            if dist2 > 0.0 {
                sums[k] += 0.5 * dist2.ln();
                counts[k] += 1;
            }
        }
    }
    if counts[0] == 0 {
        return Err(DynamicsError::Degenerate("no distinct neighbour pairs".into()));
    }
    let divergence: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();

    let indeterminate = |reason: String, range: (usize, usize), divergence: Vec<f64>| LyapunovResult {
        lambda_max: None,
        fit_range: range,
        slope_std_err: f64::NAN,
        r_squared: f64::NAN,
        divergence,
        indeterminate_reason: Some(reason),
    };
    let y0 = divergence[0];
    let tail = &divergence[k_len / 2..];
    let plateau = stats::mean(tail);
    let rise = plateau - y0;
    if !(rise > 1.0) {
        return Ok(indeterminate(
            format!("divergence rises by only {rise:.3} before saturating"),
            (0, 0),
            divergence,
        ));
    }
    let target = y0 + cfg.fit_fraction * rise;
    let end = divergence.iter().position(|&y| y >= target).unwrap_or(k_len - 1);
    if end + 1 < cfg.min_fit_points {
        return Ok(indeterminate(
            format!(
                "linear region spans {} points, fewer than {}",
                end + 1,
                cfg.min_fit_points
            ),
            (0, end),
            divergence,
        ));
    }
    let x: Vec<f64> = (0..=end).map(|k| k as f64).collect();
    let fit = stats::line_fit(&x, &divergence[..=end])
        .ok_or_else(|| DynamicsError::Degenerate("divergence fit failed".into()))?;
    Ok(LyapunovResult {
        lambda_max: Some(fit.slope),
        fit_range: (0, end),
        slope_std_err: fit.slope_std_err,
        r_squared: fit.r_squared,
        divergence,
        indeterminate_reason: None,
    })
}
