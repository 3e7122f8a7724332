//! State-model invariants, density-matrix oracles and simulated correlations.

use biphoton::quantum::*;
use biphoton::simulator::{derive_seed, simulate_run, SimConfig};
use biphoton::timetag::{find_coincidences, DEFAULT_WINDOW_PS};
use nalgebra::{Matrix4, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

fn rho(state: &StateModel) -> Matrix4<f64> {
    let d = state.density_matrix();
    Matrix4::from_fn(|i, j| d[i][j])
}

fn sqrt_psd(m: &Matrix4<f64>) -> Matrix4<f64> {
    let e = SymmetricEigen::new(*m);
    let s = e.eigenvalues.map(|x| x.max(0.0).sqrt());
    e.eigenvectors * Matrix4::from_diagonal(&s) * e.eigenvectors.transpose()
}

/// Wootters concurrence of a real two-qubit density matrix.
fn wootters(r: &Matrix4<f64>) -> f64 {
    // sigma_y (x) sigma_y is real in the computational basis
    let yy = Matrix4::new(
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0,
    );
    let tilde = yy * r * yy;
    let sr = sqrt_psd(r);
    let m = sr * tilde * sr;
    let mut l: Vec<f64> = SymmetricEigen::new((m + m.transpose()) / 2.0)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

proptest! {
    #[test]
    fn model_quantities_in_range(c in 0.0f64..=1.0, v in 0.0f64..=1.0, theta in 0.0f64..180.0) {
        let st = StateModel::new(c, v).unwrap();
        let s = chsh_from_model(&st, &SettingsSet::from_theta(theta));
        prop_assert!(s <= TSIRELSON + 1e-12);
        prop_assert!((0.0..=1.0).contains(&concurrence(&st)));
        let p = purity(&st);
        prop_assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn monotone_in_coherence_and_visibility(c in 0.0f64..0.99, v in 0.0f64..0.99, d in 0.001f64..0.01) {
        let base = StateModel::new(c, v).unwrap();
        let set = SettingsSet::standard();
        for up in [StateModel::new(c + d, v).unwrap(), StateModel::new(c, v + d).unwrap()] {
            prop_assert!(chsh_from_model(&up, &set) >= chsh_from_model(&base, &set) - 1e-12);
            prop_assert!(concurrence(&up) >= concurrence(&base) - 1e-12);
            prop_assert!(purity(&up) >= purity(&base) - 1e-12);
        }
    }

    /// Counts of exactly `N (1 +- E) / 4` recover E.
    #[test]
    fn expected_counts_recover_correlation(k in -1000i64..=1000) {
        let n = 4000i64;
        let same = ((n + 4 * k) / 4) as u64;
        let diff = ((n - 4 * k) / 4) as u64;
        let e = correlation_from_counts(&CorrelationCounts::new(same, diff, diff, same)).unwrap();
        prop_assert!((e - k as f64 / 1000.0).abs() < 1e-12);
    }
}

#[test]
fn closed_forms_match_density_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let st = StateModel::new(rng.random(), rng.random()).unwrap();
        let r = rho(&st);
        assert!((r.trace() - 1.0).abs() < 1e-12);
        assert!(SymmetricEigen::new(r).eigenvalues.iter().all(|&x| x > -1e-12));
        let p = (r * r).trace();
        assert!((purity(&st) - p).abs() < 1e-9, "{st:?}");
        let c = wootters(&r);
        assert!(
            (concurrence(&st) - c).abs() < 1e-6,
            "{st:?}: {} vs {c}",
            concurrence(&st)
        );
    }
}

/// Born-rule correlation from the density matrix, with linear polarizers
/// at `a` and `b`.
#[test]
fn correlation_matches_born_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..200 {
        let st = StateModel::new(rng.random(), rng.random()).unwrap();
        let (a, b) = (rng.random_range(0.0..180.0), rng.random_range(0.0..180.0));
        // 2x2 operator with eigenvalue +1 along the polarizer axis
        let op = |deg: f64| {
            let t = 2.0 * f64::to_radians(deg);
            nalgebra::Matrix2::new(t.cos(), t.sin(), t.sin(), -t.cos())
        };
        let e = (rho(&st) * op(a).kronecker(&op(b))).trace();
        assert!((correlation(&st, a, b) - e).abs() < 1e-12);
    }
}

fn counts(state: &StateModel, cfg: &SimConfig, x: f64, y: f64, base_seed: u64) -> CorrelationCounts {
    let mut n = [0u64; 4];
    let runs = [(x, y), (x, y + 90.0), (x + 90.0, y), (x + 90.0, y + 90.0)];
    for (i, (a, b)) in runs.into_iter().enumerate() {
        let run_cfg = SimConfig {
            seed: derive_seed(base_seed, i as u64),
            ..cfg.clone()
        };
        let s = simulate_run(&run_cfg, state, normalize_angle(a), normalize_angle(b)).unwrap();
        n[i] = find_coincidences(&s, DEFAULT_WINDOW_PS).len() as u64;
    }
    CorrelationCounts::new(n[0], n[1], n[2], n[3])
}

#[test]
fn simulated_counts_reproduce_correlation() {
    let mut cfg = SimConfig {
        jitter_sigma_ns: 0.0,
        ..SimConfig::default()
    };
    cfg.duration_s = cfg.duration_for_pairs(1e5 / 4.0);
    let st = StateModel::bell();
    for (seed, (a, b)) in [(0.0, 22.5), (0.0, 67.5), (45.0, 22.5), (30.0, 0.0)]
        .into_iter()
        .enumerate()
    {
        let c = counts(&st, &cfg, a, b, 40 + seed as u64);
        let e = correlation_from_counts(&c).unwrap();
        let expect = correlation(&st, a, b);
        let sigma = ((1.0 - expect * expect) / c.total() as f64).sqrt();
        assert!(
            (e - expect).abs() < 3.0 * sigma,
            "({a}, {b}): {e} vs {expect} +- {sigma}"
        );
    }
}

#[test]
fn calibrated_state_simulates_its_s() {
    let set = SettingsSet::standard();
    let cal = calibrate(2.67, 0.86, 0.87, &set).unwrap();
    let model_s = chsh_from_model(&cal.state, &set);
    let cfg = SimConfig::default();
    let mut index = 100;
    let mut corr = |(x, y): (f64, f64)| {
        index += 1;
        counts(&cal.state, &cfg, x, y, index)
    };
    let pairs = set.pairs();
    let c = ChshCounts {
        ab: corr(pairs[0]),
        ab_prime: corr(pairs[1]),
        a_prime_b: corr(pairs[2]),
        a_prime_b_prime: corr(pairs[3]),
    };
    let est = chsh_from_counts(&c).unwrap();
    assert!((est.s - model_s).abs() < 0.05, "{} vs {model_s}", est.s);
}
