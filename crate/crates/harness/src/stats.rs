//! Assumption-validation statistics for gain transfer between tasks.

use mdesign_core::graph::GainGraph;
use mdesign_core::similarity::kendall_tau;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyStats {
    pub edges: usize,
    /// Through-origin slope of unseen on benchmark gains.
    pub gamma: f64,
    /// Uncentered R² of the through-origin fit.
    pub r_squared: f64,
    /// Shapiro-Wilk p-value of the fit residuals; `None` if they are constant.
    pub normality_p: Option<f64>,
    pub kendall: f64,
}

/// Canonical-direction gains on edges recorded in both graphs, as
/// `(unseen, benchmark)`.
pub fn shared_gains(unseen: &GainGraph, benchmark: &GainGraph) -> (Vec<f64>, Vec<f64>) {
    let mut u = Vec::new();
    let mut b = Vec::new();
    for s in benchmark.edge_samples(false) {
        if let Some(g) = unseen.gain(&s.from, &s.to) {
            u.push(g);
            b.push(s.gain);
        }
    }
    (u, b)
}

pub fn consistency_stats(unseen: &[f64], benchmark: &[f64]) -> Result<ConsistencyStats> {
    if unseen.len() != benchmark.len() {
        return Err(HarnessError::InsufficientSamples(format!(
            "{} unseen gains but {} benchmark gains",
            unseen.len(),
            benchmark.len()
        )));
    }
    let n = unseen.len();
    if n < 3 {
        return Err(HarnessError::InsufficientSamples(format!("{n} shared edges, need at least 3")));
    }
    let sxy: f64 = unseen.iter().zip(benchmark).map(|(u, b)| u * b).sum();
    let sxx: f64 = benchmark.iter().map(|b| b * b).sum();
    let syy: f64 = unseen.iter().map(|u| u * u).sum();
    let gamma = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let r_squared = if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    let residuals: Vec<f64> = unseen.iter().zip(benchmark).map(|(u, b)| u - gamma * b).collect();
    let normality_p = shapiro_wilk(&residuals)?.map(|(_, p)| p);
    Ok(ConsistencyStats {
        edges: n,
        gamma,
        r_squared,
        normality_p,
        kendall: kendall_tau(unseen, benchmark)?,
    })
}

pub const SHAPIRO_MAX_N: usize = 5000;

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Shapiro-Wilk W and p-value using Royston's approximations, for
/// `3 <= n <= 5000`. Returns `None` when the sample has zero range.
pub fn shapiro_wilk(x: &[f64]) -> Result<Option<(f64, f64)>> {
    let n = x.len();
    if n < 3 {
        return Err(HarnessError::InsufficientSamples(format!("{n} residuals, need at least 3")));
    }
    if n > SHAPIRO_MAX_N {
        return Err(HarnessError::InsufficientSamples(format!(
            "{n} residuals exceed the supported maximum of {SHAPIRO_MAX_N}"
        )));
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    if s[n - 1] - s[0] <= f64::EPSILON * s[n - 1].abs().max(s[0].abs()) {
        return Ok(None);
    }
    let std = Normal::standard();
    let nf = n as f64;

    let mut a = vec![0.0; n];
    if n == 3 {
        a[0] = -std::f64::consts::FRAC_1_SQRT_2;
        a[2] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let m: Vec<f64> = (1..=n)
            .map(|i| std.inverse_cdf((i as f64 - 0.375) / (nf + 0.25)))
            .collect();
        let mm: f64 = m.iter().map(|v| v * v).sum();
        let u = 1.0 / nf.sqrt();
        let c1 = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        let c2 = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let an = poly(&c1, u) + m[n - 1] / mm.sqrt();
        if n > 5 {
            let an1 = poly(&c2, u) + m[n - 2] / mm.sqrt();
            let phi = (mm - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2])
                / (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
            for i in 2..n - 2 {
                a[i] = m[i] / phi.sqrt();
            }
            a[n - 1] = an;
            a[n - 2] = an1;
            a[0] = -an;
            a[1] = -an1;
        } else {
            let phi = (mm - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
            for i in 1..n - 1 {
                a[i] = m[i] / phi.sqrt();
            }
            a[n - 1] = an;
            a[0] = -an;
        }
    }

    let mean = s.iter().sum::<f64>() / nf;
    let ssq: f64 = s.iter().map(|v| (v - mean) * (v - mean)).sum();
    let num: f64 = a.iter().zip(&s).map(|(ai, xi)| ai * xi).sum();
    let w = (num * num / ssq).min(1.0);

    let p = if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - 0.75f64.sqrt().asin());
        p.clamp(0.0, 1.0)
    } else if n <= 11 {
        let gamma = poly(&[-2.273, 0.459], nf);
        let mu = poly(&[0.5440, -0.39978, 0.025054, -0.0006714], nf);
        let sigma = poly(&[1.3822, -0.77857, 0.062767, -0.0020322], nf).exp();
        let y = -(gamma - (1.0 - w).ln()).ln();
        1.0 - std.cdf((y - mu) / sigma)
    } else {
        let ln_n = nf.ln();
        let mu = poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln_n);
        let sigma = poly(&[-0.4803, -0.082676, 0.0030302], ln_n).exp();
        1.0 - std.cdf(((1.0 - w).ln() - mu) / sigma)
    };
    Ok(Some((w, p)))
}
