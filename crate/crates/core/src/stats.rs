//! Binomial intervals.

use serde::Serialize;

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for `count` successes in `trials`.
pub fn wilson(count: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// A frequency with its normal standard error and a Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub count: u64,
    pub trials: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(count: u64, trials: u64, z: f64) -> Self {
        let estimate = if trials == 0 {
            0.0
        } else {
            count as f64 / trials as f64
        };
        let stderr = if trials == 0 {
            f64::INFINITY
        } else {
            (estimate * (1.0 - estimate) / trials as f64).sqrt()
        };
        let (ci_low, ci_high) = wilson(count, trials, z);
        Proportion {
            count,
            trials,
            estimate,
            stderr,
            ci_low,
            ci_high,
        }
    }

    /// Standard error, falling back to the Wilson width when the estimate
    /// sits at 0 or 1 and the normal formula collapses.
    pub fn robust_stderr(&self) -> f64 {
        if self.count == 0 || self.count == self.trials {
            (self.ci_high - self.ci_low) / (2.0 * Z99)
        } else {
            self.stderr
        }
    }

    pub fn halfwidth(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson(30, 100, Z99);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson(0, 100, Z99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn wilson_known_value() {
        // 95% interval for 8/10: (0.4902, 0.9433)
        let (lo, hi) = wilson(8, 10, 1.959_963_984_540_054);
        assert!((lo - 0.4902).abs() < 1e-4);
        assert!((hi - 0.9433).abs() < 1e-4);
    }

    #[test]
    fn zero_estimate_keeps_positive_stderr() {
        let p = Proportion::new(0, 10_000, Z99);
        assert_eq!(p.stderr, 0.0);
        assert!(p.robust_stderr() > 0.0);
    }
}
