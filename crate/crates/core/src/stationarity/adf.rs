//! Augmented Dickey-Fuller unit-root test.

use nalgebra::{DMatrix, DVector};

use super::{CriticalValues, StationarityError, StationarityOutcome, TestKind};
use crate::stats;

pub const MIN_LENGTH: usize = 50;

/// MacKinnon (2010) response surfaces `b0 + b1/T + b2/T^2 + b3/T^3` for the
/// 1%, 5% and 10% levels.
const MACKINNON_CONSTANT: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];
const MACKINNON_TREND: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];

pub fn critical_values(nobs: usize, trend: bool) -> CriticalValues {
    let table = if trend { &MACKINNON_TREND } else { &MACKINNON_CONSTANT };
    let t = nobs as f64;
    let cv = |c: &[f64; 4]| c[0] + c[1] / t + c[2] / (t * t) + c[3] / (t * t * t);
    CriticalValues {
        one: cv(&table[0]),
        five: cv(&table[1]),
        ten: cv(&table[2]),
    }
}

/// Default maximum augmentation order, `floor(12 (n/100)^(1/4))`.
pub fn default_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

struct Design {
    /// Cross products of all candidate regressors and the response, with the
    /// response in the last row/column.
    gram: DMatrix<f64>,
    nobs: usize,
}

/// Regressors at row t: [1, (t), y_{t-1}, dy_{t-1}, ..., dy_{t-lags}]; the
/// response is dy_t, for t from `first` to the end.
fn design(y: &[f64], dy: &[f64], lags: usize, first: usize, trend: bool) -> Design {
    let det = if trend { 2 } else { 1 };
    let k = det + 1 + lags;
    let mut gram = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut row = vec![0.0; k + 1];
    for t in first..dy.len() {
        row[0] = 1.0;
        if trend {
            row[1] = t as f64 / dy.len() as f64;
        }
        // dy[t] = y[t+1] - y[t], so the level regressor is y[t]
        row[det] = y[t];
        for l in 1..=lags {
            row[det + l] = dy[t - l];
        }
        row[k] = dy[t];
        for a in 0..=k {
            let ra = row[a];
            for b in a..=k {
                gram[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..=k {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    Design {
        gram,
        nobs: dy.len() - first,
    }
}

struct Fit {
    rss: f64,
    t_gamma: f64,
}

/// OLS on the leading `k` regressors of the design.
fn fit(d: &Design, k: usize, gamma_index: usize) -> Result<Fit, StationarityError> {
    let total = d.gram.nrows() - 1;
    let xtx = d.gram.view((0, 0), (k, k)).into_owned();
    let xty = DVector::from_iterator(k, (0..k).map(|i| d.gram[(i, total)]));
    let yty = d.gram[(total, total)];
    let scale = xtx.diagonal().max();
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| StationarityError::Numerical("singular ADF regression".into()))?;
    let l = chol.l();
    let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if !(min_pivot > 1e-12 * scale) {
        return Err(StationarityError::Numerical("near-singular ADF regression".into()));
    }
    let beta = chol.solve(&xty);
    let rss = (yty - beta.dot(&xty)).max(0.0);
    let dof = d.nobs as f64 - k as f64;
    if dof <= 0.0 {
        return Err(StationarityError::Numerical("no residual degrees of freedom".into()));
    }
    let mut e = DVector::zeros(k);
    e[gamma_index] = 1.0;
    let inv_gg = chol.solve(&e)[gamma_index];
    let se = (rss / dof * inv_gg).sqrt();
    if !(se > 0.0) {
        return Err(StationarityError::Numerical("zero standard error".into()));
    }
    Ok(Fit {
        rss,
        t_gamma: beta[gamma_index] / se,
    })
}

/// ADF test with the lag order chosen by AIC up to `max_lag`.
pub fn adf_test(values: &[f64], max_lag: Option<usize>, trend: bool) -> Result<StationarityOutcome, StationarityError> {
    let n = values.len();
    if n < MIN_LENGTH {
        return Err(StationarityError::TooShort {
            needed: MIN_LENGTH,
            got: n,
        });
    }
    let sd = stats::sample_std(values);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(StationarityError::Numerical("zero-variance series".into()));
    }
    let m = stats::mean(values);
    let y: Vec<f64> = values.iter().map(|v| (v - m) / sd).collect();
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let det = if trend { 2 } else { 1 };
    let max_lag = max_lag
        .unwrap_or_else(|| default_max_lag(n))
        .min(dy.len() / 2 - det - 1);

    // lag selection on a common sample
    let common = design(&y, &dy, max_lag, max_lag, trend);
    let mut best = (f64::INFINITY, 0usize);
    for lags in 0..=max_lag {
        let k = det + 1 + lags;
        let f = fit(&common, k, det)?;
        let nobs = common.nobs as f64;
        let aic = nobs * (f.rss / nobs).ln() + 2.0 * k as f64;
        if aic < best.0 {
            best = (aic, lags);
        }
    }
    let lags = best.1;
    let full = design(&y, &dy, lags, lags, trend);
    let f = fit(&full, det + 1 + lags, det)?;
    let cv = critical_values(full.nobs, trend);
    Ok(StationarityOutcome {
        test: TestKind::Adf,
        statistic: f.t_gamma,
        lag_or_bandwidth: lags,
        indicator: u8::from(f.t_gamma < cv.five),
        critical_values: cv,
        nobs: full.nobs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values_monotone() {
        for trend in [false, true] {
            let cv = critical_values(500, trend);
            assert!(cv.one < cv.five && cv.five < cv.ten);
        }
        // large-sample limit of the constant case
        let cv = critical_values(1_000_000, false);
        assert!((cv.five + 2.86154).abs() < 1e-4);
    }

    #[test]
    fn constant_series_is_numerical_error() {
        assert!(matches!(
            adf_test(&[4.0; 200], None, false),
            Err(StationarityError::Numerical(_))
        ));
    }

    #[test]
    fn default_lag() {
        assert_eq!(default_max_lag(100), 12);
        assert_eq!(default_max_lag(10_000), 37);
    }
}
