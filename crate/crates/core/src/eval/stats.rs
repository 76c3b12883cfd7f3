use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::{par, seed};

/// Root-mean-square and mean absolute value of the residuals.
pub fn metrics(residuals: &[f64]) -> Result<(f64, f64)> {
    if residuals.is_empty() {
        return Err(Error::invalid("no residuals"));
    }
    let n = residuals.len() as f64;
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let mae = residuals.iter().map(|r| r.abs()).sum::<f64>() / n;
    Ok((rmse, mae))
}

/// Metrics of the errors relative to the true values.
pub fn relative_metrics(predictions: &[f64], truths: &[f64]) -> Result<(f64, f64)> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} truths", predictions.len()),
            got: format!("{}", truths.len()),
        });
    }
    let rel: Vec<f64> = predictions.iter().zip(truths).map(|(p, t)| (p - t) / t).collect();
    metrics(&rel)
}

pub fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|r| r * r).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn mean_abs(v: &[f64]) -> f64 {
    v.iter().map(|r| r.abs()).sum::<f64>() / v.len() as f64
}

/// Standard deviation of `statistic` over `n_boot` resamples with
/// replacement. Resample `b` depends only on `(seed, b)`.
pub fn bootstrap_se<F>(samples: &[f64], statistic: F, n_boot: usize, seed: u64) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let n = samples.len();
    if n < 2 || n_boot < 2 {
        return 0.0;
    }
    let stats = par::map_range(n_boot, |b| {
        let mut rng = seed::rng_for(seed, seed::stream::BOOTSTRAP, &[b as u64]);
        let resample: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
        statistic(&resample)
    });
    let m = stats.iter().sum::<f64>() / n_boot as f64;
    (stats.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n_boot - 1) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences `a - b`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Number of non-zero differences.
    pub n_nonzero: usize,
    pub p_value: f64,
    pub exact: bool,
}

/// Below this many non-zero differences the null distribution is enumerated.
pub const WILCOXON_EXACT_BELOW: usize = 25;

/// Two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are ranked with the rest and then dropped (Pratt); tied
/// magnitudes share mid-ranks. The null distribution is exact for fewer than
/// 25 non-zero differences and normal (tie-corrected variance, no continuity
/// correction) otherwise.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: format!("{} pairs", a.len()), got: format!("{}", b.len()) });
    }
    if a.is_empty() {
        return Err(Error::invalid("Wilcoxon test needs at least one pair"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite difference"));
    }
    let ranks = mid_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let (mut w_plus, mut w_minus) = (0.0, 0.0);
    let mut nz_ranks = Vec::new();
    for (di, r) in d.iter().zip(&ranks) {
        if *di > 0.0 {
            w_plus += r;
        } else if *di < 0.0 {
            w_minus += r;
        } else {
            continue;
        }
        nz_ranks.push(*r);
    }
    let n_nonzero = nz_ranks.len();
    if n_nonzero == 0 {
        return Ok(WilcoxonResult { w_plus, w_minus, n_nonzero, p_value: 1.0, exact: true });
    }
    let exact = n_nonzero < WILCOXON_EXACT_BELOW;
    let p_value = if exact {
        exact_p(&nz_ranks, w_plus)
    } else {
        let mean = nz_ranks.iter().sum::<f64>() / 2.0;
        let var = nz_ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
        let z = (w_plus - mean) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        2.0 * normal.cdf(-z.abs())
    };
    Ok(WilcoxonResult { w_plus, w_minus, n_nonzero, p_value: p_value.min(1.0), exact })
}

/// 1-based ranks with ties sharing their mean rank.
pub fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s + 1;
        while e < idx.len() && v[idx[e]] == v[idx[s]] {
            e += 1;
        }
        let r = (s + 1 + e) as f64 / 2.0;
        for &i in &idx[s..e] {
            ranks[i] = r;
        }
        s = e;
    }
    ranks
}

/// Exact two-sided p-value of `w_plus` given the non-zero ranks, counting
/// sign assignments on doubled (integer) ranks.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}
