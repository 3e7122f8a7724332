//! KPSS test of level or trend stationarity.

use super::{CriticalValues, StationarityError, StationarityOutcome, TestKind};
use crate::stats;

pub const MIN_LENGTH: usize = 50;

/// Asymptotic critical values at 10%, 5%, 2.5% and 1% (Kwiatkowski et al.
/// 1992, table 1).
const LEVEL: [f64; 4] = [0.347, 0.463, 0.574, 0.739];
const TREND: [f64; 4] = [0.119, 0.146, 0.176, 0.216];

pub fn critical_values(trend: bool) -> CriticalValues {
    let t = if trend { &TREND } else { &LEVEL };
    CriticalValues {
        one: t[3],
        five: t[1],
        ten: t[0],
    }
}

/// Default Bartlett bandwidth, `floor(4 (n/100)^(1/4))`.
pub fn default_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

fn residuals(values: &[f64], trend: bool) -> Vec<f64> {
    let m = stats::mean(values);
    if !trend {
        return values.iter().map(|v| v - m).collect();
    }
    let t: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
    match stats::line_fit(&t, values) {
        Some(f) => values
            .iter()
            .zip(&t)
            .map(|(v, x)| v - f.intercept - f.slope * x)
            .collect(),
        None => values.iter().map(|v| v - m).collect(),
    }
}

pub fn kpss_test(
    values: &[f64],
    bandwidth: Option<usize>,
    trend: bool,
) -> Result<StationarityOutcome, StationarityError> {
    let n = values.len();
    if n < MIN_LENGTH {
        return Err(StationarityError::TooShort {
            needed: MIN_LENGTH,
            got: n,
        });
    }
    let sd = stats::sample_std(values);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(StationarityError::Numerical("zero long-run variance".into()));
    }
    // scale first so the statistic is computed on O(1) numbers
    let m = stats::mean(values);
    let scaled: Vec<f64> = values.iter().map(|v| (v - m) / sd).collect();
    let e = residuals(&scaled, trend);
    let bw = bandwidth.unwrap_or_else(|| default_bandwidth(n)).min(n - 1);
    let nf = n as f64;
    let mut lrv = e.iter().map(|x| x * x).sum::<f64>() / nf;
    for l in 1..=bw {
        let w = 1.0 - l as f64 / (bw as f64 + 1.0);
        let cov: f64 = e[l..].iter().zip(&e[..n - l]).map(|(a, b)| a * b).sum::<f64>() / nf;
        lrv += 2.0 * w * cov;
    }
    if !(lrv > 1e-12) {
        return Err(StationarityError::Numerical("zero long-run variance".into()));
    }
    let mut s = 0.0;
    let mut eta = 0.0;
    for x in &e {
        s += x;
        eta += s * s;
    }
    let stat = eta / (nf * nf) / lrv;
    let cv = critical_values(trend);
    Ok(StationarityOutcome {
        test: TestKind::Kpss,
        statistic: stat,
        lag_or_bandwidth: bw,
        indicator: u8::from(stat > cv.five),
        critical_values: cv,
        nobs: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_rule() {
        assert_eq!(default_bandwidth(100), 4);
        assert_eq!(default_bandwidth(10_000), 12);
    }

    #[test]
    fn constant_is_error() {
        assert!(kpss_test(&[1.0; 100], None, false).is_err());
    }

    #[test]
    fn hand_computed_statistic() {
        // bandwidth 0: statistic = sum S_t^2 / (n^2 * mean e^2)
        let v: Vec<f64> = (0..60).map(|i| ((i * 7) % 11) as f64).collect();
        let m = stats::mean(&v);
        let e: Vec<f64> = v.iter().map(|x| x - m).collect();
        let mut s = 0.0;
        let mut eta = 0.0;
        for x in &e {
            s += x;
            eta += s * s;
        }
        let s2 = e.iter().map(|x| x * x).sum::<f64>() / 60.0;
        let want = eta / 3600.0 / s2;
        let got = kpss_test(&v, Some(0), false).unwrap().statistic;
        assert!((got - want).abs() < 1e-9 * want);
    }
}
