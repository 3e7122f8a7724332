//! Small numeric helpers shared by the indicator modules.

use statrs::function::erf::erfc as statrs_erfc;
use statrs::function::gamma::gamma_ur;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator). Zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Population standard deviation (n denominator).
pub fn population_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt()
}

/// Lower median: element of rank `(n - 1) / 2` in ascending order.
pub fn lower_median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    let k = (sorted.len() - 1) / 2;
    let (_, m, _) = sorted.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    *m
}

pub fn erfc(x: f64) -> f64 {
    statrs_erfc(x)
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs_erfc(-x / std::f64::consts::SQRT_2)
}

/// Regularized upper incomplete gamma function Q(a, x).
pub fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(a, x).clamp(0.0, 1.0)
}

/// Survival function of a chi-square variable with `dof` degrees of freedom.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    igamc(dof / 2.0, stat / 2.0)
}

/// Ordinary least-squares line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_err: f64,
    pub r_squared: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .sum();
    let slope_std_err = if n > 2 {
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Some(LineFit {
        slope,
        intercept,
        slope_std_err,
        r_squared,
    })
}

/// Asymptotic Kolmogorov survival function with the Stephens small-sample
/// correction applied to `d` for sample size `n`.
pub fn kolmogorov_sf(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Result of a goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
}

/// One-sample Kolmogorov-Smirnov test against the uniform law on `[lo, hi]`.
pub fn ks_uniform(values: &[f64], lo: f64, hi: f64) -> Option<GoodnessOfFit> {
    if values.is_empty() || hi <= lo {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let f = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Some(GoodnessOfFit {
        statistic: d,
        p_value: kolmogorov_sf(d, sorted.len()),
        dof: 0,
    })
}

/// Pearson chi-square test of observed counts against expected counts.
/// Adjacent cells are pooled from the tail until each expected count is at
/// least 5. `fitted_params` is subtracted from the degrees of freedom.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], fitted_params: usize) -> Option<GoodnessOfFit> {
    if observed.len() != expected.len() {
        return None;
    }
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match (obs.last_mut(), exp.last_mut()) {
            (Some(o), Some(e)) => {
                *o += o_acc;
                *e += e_acc;
            }
            _ => {
                obs.push(o_acc);
                exp.push(e_acc);
            }
        }
    }
    let cells = obs.len();
    if cells <= fitted_params + 1 {
        return None;
    }
    let stat: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells - 1 - fitted_params;
    Some(GoodnessOfFit {
        statistic: stat,
        p_value: chi_square_sf(stat, dof as f64),
        dof,
    })
}

/// Goodness of fit of inter-event times to the exponential law sampled on a
/// lattice of time slots of width `slot`.
///
/// Each value is assigned to the slot `round(value / slot)`. For events that
/// occur as a Poisson count per slot the slot index follows the exponential
/// law integrated over `[(g - 1/2) slot, (g + 1/2) slot)`, with half a slot
/// for `g = 0`. The rate is fitted from the mean slot index of the non-zero
/// gaps.
pub fn exponential_slot_gof(values: &[f64], slot: f64) -> Option<GoodnessOfFit> {
    if values.len() < 10 || slot <= 0.0 {
        return None;
    }
    let idx: Vec<usize> = values.iter().map(|&v| (v / slot).round().max(0.0) as usize).collect();
    let positive: Vec<f64> = idx.iter().filter(|&&g| g > 0).map(|&g| g as f64).collect();
    if positive.is_empty() {
        return None;
    }
    let mean_gap = mean(&positive);
    if mean_gap <= 1.0 {
        return None;
    }
    let q = -(1.0 - 1.0 / mean_gap).ln();
    let max_g = *idx.iter().max()?;
    let mut observed = vec![0.0; max_g + 2];
    for &g in &idx {
        observed[g] += 1.0;
    }
    let n = values.len() as f64;
    let mut expected = Vec::with_capacity(max_g + 2);
    expected.push(n * (1.0 - (-q / 2.0).exp()));
    for g in 1..=max_g {
        let gf = g as f64;
        expected.push(n * ((-q * (gf - 0.5)).exp() - (-q * (gf + 0.5)).exp()));
    }
    // open-ended tail cell
    expected.push(n * (-q * (max_g as f64 + 0.5)).exp());
    chi_square_gof(&observed, &expected, 1)
}
