//! Replicate summaries and exact binomial intervals.

use fbmarb_core::math::CompensatedSum;
use serde::Serialize;
use statrs::function::beta::inv_beta_reg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub se: f64,
}

/// Mean and standard error, accumulated in input order.
pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { count: 0, mean: f64::NAN, se: f64::NAN };
    }
    let mean = xs.iter().copied().collect::<CompensatedSum>().value() / n as f64;
    if n == 1 {
        return Summary { count: 1, mean, se: f64::NAN };
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).collect::<CompensatedSum>().value();
    Summary { count: n, mean, se: (ss / (n - 1) as f64 / n as f64).sqrt() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialInterval {
    pub successes: usize,
    pub trials: usize,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
}

/// Two-sided Clopper-Pearson interval at the given confidence.
pub fn clopper_pearson(successes: usize, trials: usize, confidence: f64) -> BinomialInterval {
    assert!(successes <= trials && trials > 0);
    assert!(confidence > 0.0 && confidence < 1.0);
    let alpha = 1.0 - confidence;
    let (k, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 { 0.0 } else { inv_beta_reg(k, n - k + 1.0, alpha / 2.0) };
    let upper = if successes == trials { 1.0 } else { inv_beta_reg(k + 1.0, n - k, 1.0 - alpha / 2.0) };
    BinomialInterval { successes, trials, estimate: k / n, lower, upper, confidence }
}
