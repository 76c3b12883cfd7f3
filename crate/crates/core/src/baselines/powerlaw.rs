//! Power-law fits `t = c * s^alpha` by least squares in log-log coordinates.

use crate::datamodel::PerformanceTable;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct IndividualPowerLaw {
    pub exponent: f64,
    /// `c` in seconds per meter^alpha.
    pub coefficient: f64,
    pub rss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalPowerLaw {
    pub exponent: f64,
    /// Per-athlete `c`; `None` for athletes without entries.
    pub coefficients: Vec<Option<f64>>,
    pub rss: f64,
}

/// Ordinary least squares of `log t` on `log s` for one athlete.
pub fn fit_individual(distances: &[f64], times: &[f64]) -> Result<IndividualPowerLaw> {
    if distances.len() != times.len() {
        return Err(Error::invalid("distances and times differ in length"));
    }
    if distances.len() < 2 {
        return Err(Error::InsufficientAttempts { needed: 2, have: distances.len() });
    }
    if distances.iter().chain(times).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("distances and times must be positive"));
    }
    let x: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 1e-12 * mx.abs().max(1.0) {
        return Err(Error::invalid("all attempts at the same distance"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let rss = x.iter().zip(&y).map(|(a, b)| (b - intercept - exponent * a).powi(2)).sum();
    Ok(IndividualPowerLaw { exponent, coefficient: intercept.exp(), rss })
}

fn row_log_points(table: &PerformanceTable, row: usize) -> (Vec<f64>, Vec<f64>) {
    table
        .present_cols(row)
        .into_iter()
        .map(|j| {
            let t = table.value_to_time(j, table.get(row, j).expect("present"));
            (table.catalog().distance(j).ln(), t.ln())
        })
        .unzip()
}

/// Shared exponent with per-athlete intercepts; the intercepts are profiled
/// out, leaving the pooled within-athlete slope.
pub fn fit_global(table: &PerformanceTable) -> Result<GlobalPowerLaw> {
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..table.n_athletes()).map(|i| row_log_points(table, i)).collect();
    let (mut sxx, mut sxy) = (0.0, 0.0);
    let mut means = Vec::with_capacity(rows.len());
    for (x, y) in &rows {
        if x.is_empty() {
            means.push(None);
            continue;
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("times must be positive"));
        }
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        sxx += x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        sxy += x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>();
        means.push(Some((mx, my)));
    }
    if sxx <= 1e-12 {
        return Err(Error::invalid("no athlete has attempts at two distinct distances"));
    }
    let exponent = sxy / sxx;
    let mut rss = 0.0;
    let mut coefficients = Vec::with_capacity(rows.len());
    for ((x, y), m) in rows.iter().zip(&means) {
        match m {
            Some((mx, my)) => {
                let b = my - exponent * mx;
                rss += x.iter().zip(y).map(|(a, v)| (v - b - exponent * a).powi(2)).sum::<f64>();
                coefficients.push(Some(b.exp()));
            }
            None => coefficients.push(None),
        }
    }
    Ok(GlobalPowerLaw { exponent, coefficients, rss })
}

/// Residual sum of squares of athlete `row` under a given exponent with its
/// own best intercept.
pub fn rss_with_exponent(table: &PerformanceTable, row: usize, exponent: f64) -> f64 {
    let (x, y) = row_log_points(table, row);
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let b = (y.iter().sum::<f64>() - exponent * x.iter().sum::<f64>()) / n;
    x.iter().zip(&y).map(|(a, v)| (v - b - exponent * a).powi(2)).sum()
}

/// Individual fit on the row's entries other than `skip`.
pub fn fit_row(table: &PerformanceTable, row: usize, skip: usize) -> Result<IndividualPowerLaw> {
    let cols: Vec<usize> = table.present_cols(row).into_iter().filter(|&j| j != skip).collect();
    let d: Vec<f64> = cols.iter().map(|&j| table.catalog().distance(j)).collect();
    let t: Vec<f64> = cols.iter().map(|&j| table.value_to_time(j, table.get(row, j).expect("present"))).collect();
    fit_individual(&d, &t)
}
