//! Reference statistics from statsmodels (adfuller with AIC lag selection,
//! kpss with a fixed Bartlett bandwidth) on deterministic series.

mod common;

use biphoton::stationarity::*;

fn base() -> Vec<f64> {
    (0..400u64)
        .map(|i| ((i * 7919 + 13) * (i % 97 + 31) % 1009) as f64 / 1009.0 - 0.5)
        .collect()
}

fn walk() -> Vec<f64> {
    let mut acc = 0.0;
    base()
        .into_iter()
        .map(|u| {
            acc += u;
            acc
        })
        .collect()
}

fn ar() -> Vec<f64> {
    let u = base();
    let mut out = vec![0.0; u.len()];
    for i in 1..u.len() {
        out[i] = 0.6 * out[i - 1] + u[i];
    }
    out
}

fn close(got: f64, want: f64) {
    assert!(
        (got - want).abs() <= 1e-6 * want.abs().max(1.0),
        "got {got}, want {want}"
    );
}

#[test]
fn adf_matches_reference() {
    for (y, stat, lag, nobs, cv5) in [
        (base(), -13.470155652647511, 2, 397, -2.8688478565083417),
        (walk(), -1.9149761486094856, 4, 395, -2.8688850015516016),
        (ar(), -7.601237321355784, 3, 396, -2.868866381945153),
    ] {
        let r = adf_test(&y, None, false).unwrap();
        close(r.statistic, stat);
        assert_eq!(r.lag_or_bandwidth, lag);
        assert_eq!(r.nobs, nobs);
        close(r.critical_values.five, cv5);
    }
}

#[test]
fn adf_trend_matches_reference() {
    for (y, stat, lag) in [
        (base(), -13.473044704513734, 2),
        (walk(), -2.5783542418170273, 4),
        (ar(), -7.629350408543202, 3),
    ] {
        let r = adf_test(&y, None, true).unwrap();
        close(r.statistic, stat);
        assert_eq!(r.lag_or_bandwidth, lag);
    }
}

#[test]
fn kpss_matches_reference() {
    for (y, level, trend) in [
        (base(), 0.08490697232825813, 0.049264485190628045),
        (walk(), 2.591760203863521, 0.7410071501361024),
        (ar(), 0.12202179358418391, 0.06622942106317116),
    ] {
        let r = kpss_test(&y, None, false).unwrap();
        assert_eq!(r.lag_or_bandwidth, 5);
        close(r.statistic, level);
        close(kpss_test(&y, None, true).unwrap().statistic, trend);
    }
}

#[test]
fn level_kpss_detects_trend() {
    let noise = common::white_noise(4, 10_000);
    let y: Vec<f64> = noise.iter().enumerate().map(|(t, e)| 0.001 * t as f64 + e).collect();
    assert_eq!(kpss_test(&y, None, false).unwrap().indicator, 1);
}

#[test]
fn verdicts_invariant_under_affine_maps() {
    for seed in 0..5 {
        let y = common::white_noise(seed, 2_000);
        let w = common::random_walk(seed, 2_000);
        for s in [&y, &w] {
            let t: Vec<f64> = s.iter().map(|v| -7.0 * v + 300.0).collect();
            let (a, b) = (adf_test(s, None, false).unwrap(), adf_test(&t, None, false).unwrap());
            assert_eq!(a.indicator, b.indicator);
            assert!((a.statistic - b.statistic).abs() < 1e-6);
            let (a, b) = (kpss_test(s, None, false).unwrap(), kpss_test(&t, None, false).unwrap());
            assert_eq!(a.indicator, b.indicator);
            assert!((a.statistic - b.statistic).abs() < 1e-9);
        }
    }
}

#[test]
fn collinear_regression_is_numerical_error() {
    let ramp: Vec<f64> = (0..200).map(|i| i as f64).collect();
    assert!(matches!(
        adf_test(&ramp, None, false),
        Err(StationarityError::Numerical(_))
    ));
}
