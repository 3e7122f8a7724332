//! Complexity, Hurst and NIST battery properties.

mod common;

use biphoton::randomness::complexity::{lz76_phrase_count, normalized_complexity};
use biphoton::randomness::hurst::hurst_exponent;
use biphoton::randomness::nist_battery;
use biphoton::series::ThresholdKind;
use biphoton::stats;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// The quadratic scan published with the normalized complexity.
fn kaspar_schuster(s: &[u8]) -> usize {
    let n = s.len();
    if n == 1 {
        return 1;
    }
    let (mut c, mut l, mut i, mut k, mut k_max) = (1, 1, 0, 1, 1);
    loop {
        if s[i + k - 1] == s[l + k - 1] {
            k += 1;
            if l + k > n {
                c += 1;
                break;
            }
        } else {
            k_max = k_max.max(k);
            i += 1;
            if i == l {
                c += 1;
                l += k_max;
                if l + 1 > n {
                    break;
                }
                i = 0;
                k = 1;
                k_max = 1;
            } else {
                k = 1;
            }
        }
    }
    c
}

fn random_bits(seed: u64, n: usize, p_one: f64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| u8::from(rng.random_bool(p_one))).collect()
}

proptest! {
    #[test]
    fn lz76_matches_reference_scan(bits in prop::collection::vec(0u8..2, 1..400)) {
        prop_assert_eq!(lz76_phrase_count(&bits).unwrap(), kaspar_schuster(&bits));
    }

    #[test]
    fn lz76_matches_on_biased_input(seed in any::<u64>(), p in 0.01f64..0.3, n in 1usize..3000) {
        let bits = random_bits(seed, n, p);
        prop_assert_eq!(lz76_phrase_count(&bits).unwrap(), kaspar_schuster(&bits));
    }

    #[test]
    fn complexity_ignores_complement(bits in prop::collection::vec(0u8..2, 1..2000)) {
        let flipped: Vec<u8> = bits.iter().map(|b| 1 - b).collect();
        prop_assert_eq!(lz76_phrase_count(&bits).unwrap(), lz76_phrase_count(&flipped).unwrap());
    }

    /// Lempel-Ziv upper bound `c(n) < n / ((1 - eps_n) log2 n)` with
    /// `eps_n = 2 (1 + log2 log2 (2n)) / log2 n`.
    #[test]
    fn phrase_count_below_lz_bound(seed in any::<u64>(), n in 70_000usize..120_000) {
        let bits = random_bits(seed, n, 0.5);
        let nf = n as f64;
        let log_n = nf.log2();
        let eps = 2.0 * (1.0 + (2.0 * nf).log2().log2()) / log_n;
        prop_assert!((lz76_phrase_count(&bits).unwrap() as f64) < nf / ((1.0 - eps) * log_n));
    }

    #[test]
    fn hurst_is_affine_invariant(
        seed in any::<u64>(),
        scale in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
        offset in -1e6f64..1e6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..2048).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| scale * v + offset).collect();
        let (hx, hy) = (hurst_exponent(&x).unwrap().h, hurst_exponent(&y).unwrap().h);
        prop_assert!((hx - hy).abs() < 1e-6, "{hx} vs {hy}");
    }
}

#[test]
fn fair_coin_complexity_concentrates() {
    let k: Vec<f64> = (0..100)
        .into_par_iter()
        .map(|seed| {
            normalized_complexity(&common::fair_bits(7000 + seed, 100_000), ThresholdKind::None)
                .unwrap()
                .normalized
        })
        .collect();
    let sd = stats::sample_std(&k);
    assert!(sd < 0.02, "{sd}");
    let m = stats::mean(&k);
    assert!((0.99..=1.05).contains(&m), "{m}");
}

#[test]
fn nist_p_values_are_uniform_on_fair_bits() {
    let per_series: Vec<Vec<(String, f64)>> = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let bits = common::fair_bits(9000 + seed, 100_000);
            nist_battery(&bits, 0.01)
                .unwrap()
                .into_iter()
                .flat_map(|o| {
                    let name = o.test_name.clone();
                    o.p_values.into_iter().map(move |(l, p)| (format!("{name}.{l}"), p))
                })
                .collect()
        })
        .collect();
    let mut by_name: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rows in per_series {
        for (name, p) in rows {
            by_name.entry(name).or_default().push(p);
        }
    }
    assert_eq!(by_name.len(), 12);
    for (name, ps) in &by_name {
        assert_eq!(ps.len(), 1000, "{name}");
        let ks = stats::ks_uniform(ps, 0.0, 1.0).unwrap();
        assert!(ks.p_value > 0.001, "{name}: {ks:?}");
    }
}
