//! Small statistics helpers shared by the experiment drivers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One-sided 95% normal quantile.
pub const Z95: f64 = 1.6448536269514722;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(x) / x.len() as f64
}

/// Pairwise summation with a fixed split, so the result does not depend on
/// scheduling.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Sample standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(x);
    let ss: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    (pairwise_sum(&ss) / (n as f64 - 1.0)).sqrt()
}

/// Standard error of the mean.
pub fn std_err(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    std_dev(x) / (x.len() as f64).sqrt()
}

pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn max(x: &[f64]) -> f64 {
    x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min(x: &[f64]) -> f64 {
    x.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Least-squares line `y = a + b x`; returns the slope `b`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ls_slope(&lx, &ly)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Log-log slope of per-level medians with a percentile bootstrap band:
/// each replicate resamples the observations within every x level.
pub fn loglog_slope_bootstrap(levels: &[f64], samples: &[Vec<f64>], reps: usize, seed: u64) -> SlopeFit {
    let medians: Vec<f64> = samples.iter().map(|s| median(s)).collect();
    let slope = loglog_slope(levels, &medians);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boot = Vec::with_capacity(reps);
    for _ in 0..reps {
        let meds: Vec<f64> = samples
            .iter()
            .map(|s| {
                let r: Vec<f64> = (0..s.len()).map(|_| s[rng.gen_range(0..s.len())]).collect();
                median(&r)
            })
            .collect();
        let b = loglog_slope(levels, &meds);
        if b.is_finite() {
            boot.push(b);
        }
    }
    boot.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| -> f64 {
        if boot.is_empty() {
            return f64::NAN;
        }
        let idx = ((boot.len() - 1) as f64 * p).round() as usize;
        boot[idx]
    };
    SlopeFit {
        slope,
        lo95: q(0.025),
        hi95: q(0.975),
    }
}

/// Running log-log slopes between consecutive points (first entry NaN).
pub fn running_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            if i == 0 {
                f64::NAN
            } else {
                (y[i].ln() - y[i - 1].ln()) / (x[i].ln() - x[i - 1].ln())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        assert!((loglog_slope(&x, &y) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn bootstrap_band_contains_slope() {
        let levels = [1.0, 2.0, 4.0];
        let samples = vec![vec![1.0, 1.1, 0.9], vec![0.5, 0.55, 0.45], vec![0.25, 0.2, 0.3]];
        let fit = loglog_slope_bootstrap(&levels, &samples, 200, 1);
        assert!(fit.lo95 <= fit.slope && fit.slope <= fit.hi95);
    }
}
