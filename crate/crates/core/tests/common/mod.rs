#![allow(dead_code)]

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bits(s: &str) -> Vec<u8> {
    s.bytes().map(|c| c - b'0').collect()
}

/// First `n` bits of the binary expansion of e (integer part included),
/// from the series sum of 1/k! in fixed point.
pub fn e_bits(n: usize) -> Vec<u8> {
    let frac_bits = n + 64;
    let one = BigUint::from(1u32) << frac_bits;
    let mut term = one.clone();
    let mut sum = &one + &one;
    let mut k = 2u32;
    loop {
        term /= k;
        if term.bits() == 0 {
            break;
        }
        sum += &term;
        k += 1;
    }
    let s = sum.to_str_radix(2);
    s.bytes().take(n).map(|c| c - b'0').collect()
}

pub fn fair_bits(seed: u64, n: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w: u64 = rng.random();
        for i in 0..64.min(n - out.len()) {
            out.push(((w >> i) & 1) as u8);
        }
    }
    out
}

pub fn white_noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    (0..n).map(|_| rng.sample::<f64, _>(normal)).collect()
}

pub fn random_walk(seed: u64, n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    white_noise(seed, n)
        .into_iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

pub fn henon_x(n: usize, x0: f64, y0: f64) -> Vec<f64> {
    let (mut x, mut y) = (x0, y0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n + 1000 {
        let nx = 1.0 - 1.4 * x * x + y;
        y = 0.3 * x;
        x = nx;
        if i >= 1000 {
            out.push(x);
        }
    }
    out
}

pub fn logistic(n: usize, x0: f64) -> Vec<f64> {
    let mut x = x0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n + 1000 {
        x = 4.0 * x * (1.0 - x);
        if i >= 1000 {
            out.push(x);
        }
    }
    out
}
