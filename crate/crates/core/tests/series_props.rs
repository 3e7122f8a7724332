//! Series construction properties and simulated-series oracles.

use biphoton::quantum::StateModel;
use biphoton::series::*;
use biphoton::simulator::{simulate_run, SimConfig};
use biphoton::timetag::{
    assign_pulses_guarded, find_coincidences, CoincidenceEvent, DEFAULT_PRE_TRIGGER_GUARD_PS, DEFAULT_WINDOW_PS,
};
use proptest::prelude::*;

fn events(times: &[u64]) -> Vec<CoincidenceEvent> {
    times.iter().map(|&t| CoincidenceEvent::new(t)).collect()
}

fn sorted(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}

proptest! {
    #[test]
    fn dt_is_translation_invariant(
        times in prop::collection::vec(0u64..1_000_000_000, 2..200).prop_map(sorted),
        shift in 0u64..1_000_000_000,
    ) {
        let meta = SeriesMeta::new((0.0, 0.0));
        let a = build_dt(&events(&times), meta.clone()).unwrap();
        let moved: Vec<u64> = times.iter().map(|t| t + shift).collect();
        let b = build_dt(&events(&moved), meta).unwrap();
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn median_split_is_balanced(perm in Just((0..500u32).collect::<Vec<_>>()).prop_shuffle(), n in 2usize..500) {
        let values: Vec<f64> = perm.into_iter().filter(|&x| (x as usize) < n).map(f64::from).collect();
        let s = RealSeries { values, kind: SeriesKind::Dt, meta: SeriesMeta::new((0.0, 0.0)) };
        let bits = binarize(&s, ThresholdKind::Median).unwrap();
        prop_assert!((bits.ones_fraction() - 0.5).abs() <= 1.0 / n as f64);
    }

    /// Bits mark which run each time came from; reading them back against
    /// the merged, sorted times recovers both inputs.
    #[test]
    fn intercalation_projects_back(
        rot in prop::collection::vec(0u64..10_000, 1..100).prop_map(sorted),
        unrot in prop::collection::vec(0u64..10_000, 1..100).prop_map(sorted),
    ) {
        let bits = intercalate_outcomes(&events(&rot), &events(&unrot), SeriesMeta::new((0.0, 0.0))).unwrap().bits;
        prop_assert_eq!(bits.len(), rot.len() + unrot.len());
        let mut merged: Vec<(u64, u8)> = rot.iter().map(|&t| (t, 1)).chain(unrot.iter().map(|&t| (t, 0))).collect();
        merged.sort_unstable();
        let (mut r, mut u) = (Vec::new(), Vec::new());
        for (&b, &(t, _)) in bits.iter().zip(&merged) {
            if b == 1 { r.push(t) } else { u.push(t) }
        }
        prop_assert_eq!(r, rot);
        prop_assert_eq!(u, unrot);
    }

    #[test]
    fn series_files_round_trip(values in prop::collection::vec(0.0f64..1e9, 1..50), bits in prop::collection::vec(0u8..2, 1..50)) {
        let meta = SeriesMeta::new((45.0, 67.5)).with("seed", "3");
        let real = SeriesData::Real(RealSeries { values, kind: SeriesKind::Deltat, meta: meta.clone() });
        prop_assert_eq!(parse_series(&format_series(&real)).unwrap(), real);
        let bin = SeriesData::Binary(BinarySeries { bits, threshold_kind: ThresholdKind::None, meta }, SeriesKind::Outcomes);
        prop_assert_eq!(parse_series(&format_series(&bin)).unwrap(), bin);
    }
}

fn run(cfg: &SimConfig, a: f64, b: f64) -> Vec<CoincidenceEvent> {
    let s = simulate_run(cfg, &StateModel::bell(), a, b).unwrap();
    let raw = find_coincidences(&s, DEFAULT_WINDOW_PS);
    assign_pulses_guarded(&raw, &s.triggers(), cfg.period_ps(), DEFAULT_PRE_TRIGGER_GUARD_PS).unwrap()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// At E = 1 without jitter a pulse holds `mu eta^2 / 2` true coincidences
/// on average, plus chance pairings of unpaired singles, which number
/// `m (1 - eta)` per station and meet within `w` with probability
/// `2w/W - (w/W)^2` for uniform births over a pulse of width `W`.
#[test]
fn dt_mean_matches_coincidence_rate() {
    let cfg = SimConfig {
        duration_s: 60.0,
        seed: 21,
        jitter_sigma_ns: 0.0,
        ..SimConfig::default()
    };
    let c = run(&cfg, 0.0, 0.0);
    let dt = build_dt(&c, SeriesMeta::new((0.0, 0.0))).unwrap();
    let (m, eta) = (cfg.mean_detected_photons_per_pulse, cfg.pair_efficiency);
    let mu = 2.0 * m / eta;
    let x = DEFAULT_WINDOW_PS as f64 / cfg.width_ps() as f64;
    let per_pulse = mu * eta * eta / 2.0 + (m * (1.0 - eta)).powi(2) * (2.0 * x - x * x);
    let expect = cfg.period_ps() as f64 / per_pulse;
    let got = mean(&dt.values);
    let sigma = std(&dt.values) / (dt.values.len() as f64).sqrt();
    assert!((got - expect).abs() < 3.0 * sigma, "{got} vs {expect} +- {sigma}");
}

/// Coincidences per pulse are Poisson, so occupied pulses are separated by
/// geometric gaps and gaps inside a pulse are far below the mean. The share
/// of gaps above the mean follows from the occupied-pulse count alone; for
/// a continuous exponential it would be exactly 1/e.
#[test]
fn mean_threshold_share_follows_geometric_gaps() {
    let cfg = SimConfig {
        duration_s: 120.0,
        seed: 22,
        ..SimConfig::default()
    };
    let c = run(&cfg, 0.0, 22.5);
    let dt = build_dt(&c, SeriesMeta::new((0.0, 22.5))).unwrap();
    let bits = binarize(&dt, ThresholdKind::Mean).unwrap();
    let n = dt.values.len() as f64;

    let mut occupied: Vec<usize> = c.iter().map(|e| e.pulse.unwrap().index).collect();
    occupied.dedup();
    let pulses = (c.last().unwrap().pulse.unwrap().index - c[0].pulse.unwrap().index) as f64;
    let p = occupied.len() as f64 / pulses;
    let k = (mean(&dt.values) / cfg.period_ps() as f64).floor();
    let cross = (occupied.len() - 1) as f64 / n;
    let expect = cross * (1.0 - p).powf(k);
    let got = bits.ones_fraction();
    let sigma = (expect * (1.0 - expect) / n).sqrt();
    assert!((got - expect).abs() < 4.0 * sigma + 0.002, "{got} vs {expect}");
    assert!((got - (-1.0f64).exp()).abs() < 0.02, "{got}");
}

/// The rotated pair (a+90, b+90) has the same correlation as (a, b), so
/// both runs have the same coincidence rate and the ones share is 1/2.
#[test]
fn intercalated_share_matches_rates() {
    let cfg = SimConfig {
        seed: 23,
        ..SimConfig::default()
    };
    let unrot = run(&cfg, 0.0, 22.5);
    let rot = run(
        &SimConfig {
            seed: 24,
            ..cfg.clone()
        },
        90.0,
        112.5,
    );
    let bits = intercalate_outcomes(&rot, &unrot, SeriesMeta::new((0.0, 22.5))).unwrap();
    let ones = bits.bits.iter().filter(|&&b| b == 1).count();
    assert_eq!(ones, rot.len());
    let n = bits.bits.len() as f64;
    let got = bits.ones_fraction();
    assert!((got - 0.5).abs() < 3.0 * (0.25 / n).sqrt(), "{got}");
}
