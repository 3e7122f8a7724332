//! Seeded generation of time-tagged detection streams.
//!
//! # Count-rate model
//!
//! Every pump pulse emits `N ~ Poisson(mu)` photon pairs, each born at a time
//! uniform over the square pulse. A pair yields polarizer outcomes `(i, j)`
//! with probability `(1 + i j E(a, b)) / 4`; a station records a photon only
//! for the transmitted outcome `+1`, and then only with detector efficiency
//! `eta`. The state's single-photon marginals are unpolarized, so
//!
//! * singles per station and pulse: `m = mu * eta / 2`
//! * coincidences per pulse: `mu * eta^2 * (1 + E) / 4`
//! * coincidences per single: `eta * (1 + E) / 2`
//!
//! With `eta = pair_efficiency` and `m = mean_detected_photons_per_pulse` the
//! pair rate is `mu = 2 m / eta`.
//!
//! Trigger times sit on the pulse lattice with truncated Gaussian jitter; each
//! detection gets its own truncated Gaussian jitter. Uncorrelated background
//! detections (`accidental_rate` per pulse and channel) are uniform over the
//! pulse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use crate::quantum::{correlation, StateModel};
use crate::timetag::{Channel, RunMeta, TimeTagRecord, TimeTagStream};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid simulation config: {0}")]
    Config(String),
}

/// Run profile of a simulated acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub pulse_period_ns: f64,
    pub pulse_width_ns: f64,
    pub duration_s: f64,
    /// Mean detected singles per pulse at each station.
    pub mean_detected_photons_per_pulse: f64,
    /// Detector efficiency; equals the coincidence-to-singles ratio at E = 1.
    pub pair_efficiency: f64,
    pub jitter_sigma_ns: f64,
    /// Background detections per pulse and channel.
    pub accidental_rate: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            pulse_period_ns: 20_000.0,
            pulse_width_ns: 500.0,
            duration_s: 300.0,
            mean_detected_photons_per_pulse: 0.08,
            pair_efficiency: 0.25,
            jitter_sigma_ns: 1.0,
            accidental_rate: 0.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::Config(m));
        if !(self.pulse_width_ns > 0.0 && self.pulse_width_ns < self.pulse_period_ns) {
            return bad(format!(
                "pulse width {} ns must be positive and below the period {} ns",
                self.pulse_width_ns, self.pulse_period_ns
            ));
        }
        for (name, v) in [
            ("duration", self.duration_s),
            ("mean photons per pulse", self.mean_detected_photons_per_pulse),
            ("jitter", self.jitter_sigma_ns),
            ("accidental rate", self.accidental_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.pair_efficiency) {
            return bad(format!("pair efficiency {} outside [0, 1]", self.pair_efficiency));
        }
        if self.pair_efficiency > 0.0 && self.pairs_per_pulse() > 1e6 {
            return bad("pair rate too large".into());
        }
        Ok(())
    }

    pub fn period_ps(&self) -> u64 {
        (self.pulse_period_ns * 1000.0).round() as u64
    }

    pub fn width_ps(&self) -> u64 {
        (self.pulse_width_ns * 1000.0).round() as u64
    }

    pub fn jitter_ps(&self) -> f64 {
        self.jitter_sigma_ns * 1000.0
    }

    pub fn n_pulses(&self) -> u64 {
        let period_s = self.period_ps() as f64 * 1e-12;
        (self.duration_s / period_s + 1e-9).floor() as u64
    }

    /// Mean number of emitted pairs per pulse, `2 m / eta`.
    pub fn pairs_per_pulse(&self) -> f64 {
        if self.pair_efficiency == 0.0 {
            0.0
        } else {
            2.0 * self.mean_detected_photons_per_pulse / self.pair_efficiency
        }
    }

    /// Start of the pulse lattice, leaving room for negative jitter of
    /// triggers and detections.
    fn origin_ps(&self) -> u64 {
        (6.0 * self.jitter_ps()).ceil() as u64
    }

    /// Duration that emits `pairs` pairs on average.
    pub fn duration_for_pairs(&self, pairs: f64) -> f64 {
        pairs / self.pairs_per_pulse() * self.period_ps() as f64 * 1e-12
    }
}

/// Gaussian draw truncated at three standard deviations by rejection.
fn truncated_jitter<R: Rng>(rng: &mut R, normal: &Option<Normal<f64>>) -> f64 {
    match normal {
        None => 0.0,
        Some(n) => loop {
            let x = n.sample(rng);
            if x.abs() <= 3.0 * n.std_dev() {
                break x;
            }
        },
    }
}

fn jitter_dist(sigma_ps: f64) -> Option<Normal<f64>> {
    (sigma_ps > 0.0).then(|| Normal::new(0.0, sigma_ps).expect("finite sigma"))
}

fn pulse_times<R: Rng>(config: &SimConfig, rng: &mut R) -> Vec<u64> {
    let period = config.period_ps();
    let origin = config.origin_ps() as f64;
    let normal = jitter_dist(config.jitter_ps());
    (0..config.n_pulses())
        .map(|k| {
            let t = origin + (k * period) as f64 + truncated_jitter(rng, &normal);
            t.round().max(0.0) as u64
        })
        .collect()
}

/// Trigger timestamps of the run, `floor(duration / period)` of them.
pub fn pulse_train(config: &SimConfig) -> Result<Vec<u64>, SimulationError> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    Ok(pulse_times(config, &mut rng))
}

/// Simulates one acquisition at polarizer angles `(a, b)` in degrees.
pub fn simulate_run(
    config: &SimConfig,
    state: &StateModel,
    a_deg: f64,
    b_deg: f64,
) -> Result<TimeTagStream, SimulationError> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let triggers = pulse_times(config, &mut rng);

    let e = correlation(state, a_deg, b_deg);
    // outcome probabilities for (+,+), (+,-), (-,+); (-,-) is the remainder
    let p_pp = (1.0 + e) / 4.0;
    let p_pm = (1.0 - e) / 4.0;
    let eta = config.pair_efficiency;
    let width = config.width_ps() as f64;
    let pairs = Poisson::new(config.pairs_per_pulse()).ok();
    let background = Poisson::new(config.accidental_rate).ok();
    let detect_jitter = jitter_dist(config.jitter_ps());

    let expected = (triggers.len() as f64 * (1.0 + 2.0 * config.mean_detected_photons_per_pulse * 1.2)) as usize;
    let mut records = Vec::with_capacity(expected + 16);
    let mut pulse = Vec::with_capacity(8);
    for &t0 in &triggers {
        pulse.clear();
        pulse.push(TimeTagRecord::new(Channel::T, t0));
        let n_pairs = pairs.as_ref().map_or(0, |d| d.sample(&mut rng) as u64);
        for _ in 0..n_pairs {
            let birth = t0 as f64 + rng.random::<f64>() * width;
            let u: f64 = rng.random();
            let (plus_a, plus_b) = if u < p_pp {
                (true, true)
            } else if u < p_pp + p_pm {
                (true, false)
            } else if u < p_pp + 2.0 * p_pm {
                (false, true)
            } else {
                (false, false)
            };
            if plus_a && rng.random::<f64>() < eta {
                let t = birth + truncated_jitter(&mut rng, &detect_jitter);
                pulse.push(TimeTagRecord::new(Channel::A, t.round().max(0.0) as u64));
            }
            if plus_b && rng.random::<f64>() < eta {
                let t = birth + truncated_jitter(&mut rng, &detect_jitter);
                pulse.push(TimeTagRecord::new(Channel::B, t.round().max(0.0) as u64));
            }
        }
        if let Some(bg) = &background {
            for channel in [Channel::A, Channel::B] {
                for _ in 0..bg.sample(&mut rng) as u64 {
                    let t = t0 as f64 + rng.random::<f64>() * width;
                    pulse.push(TimeTagRecord::new(channel, t.round() as u64));
                }
            }
        }
        pulse.sort_unstable();
        records.extend_from_slice(&pulse);
    }

    let mut meta = RunMeta::new((a_deg, b_deg), config.period_ps(), config.width_ps(), config.duration_s)
        .map_err(|e| SimulationError::Config(e.to_string()))?;
    meta.seed = Some(config.seed);
    meta.set_extra("state", format!("c={},v={}", state.coherence(), state.visibility()));
    TimeTagStream::new(records, meta).map_err(|e| SimulationError::Config(e.to_string()))
}

/// Derives an independent seed for run `index` from a base seed (SplitMix64).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
