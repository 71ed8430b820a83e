use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// Empirical frequency with an exact two-sided binomial interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: usize,
    pub trials: usize,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn from_counts(successes: usize, trials: usize, confidence: f64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(successes, trials, confidence);
        Estimate {
            successes,
            trials,
            p: successes as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Clopper–Pearson interval for `k` successes in `n > 0` trials.
pub fn clopper_pearson(k: usize, n: usize, confidence: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n and n > 0");
    let alpha = 1.0 - confidence;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0))
}
