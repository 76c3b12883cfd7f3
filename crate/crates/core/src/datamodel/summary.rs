use serde::{Deserialize, Serialize};

use super::table::PerformanceTable;
use crate::error::{Error, Result};

/// Per-event percentiles with the same shape and missingness as the source table.
///
/// A percentile is `100 * (strictly worse entries + (ties - 1) / 2) / (n - 1)`
/// over the `n` present entries of the column, so the best entry scores 100,
/// the worst 0, and tied entries share the mean of their ranks. A column with
/// a single entry scores 50.
#[derive(Clone, Debug, PartialEq)]
pub struct PercentileGrid {
    n_events: usize,
    values: Vec<f64>,
}

impl PercentileGrid {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[row * self.n_events + col];
        (!v.is_nan()).then_some(v)
    }

    pub fn row(&self, row: usize) -> Vec<Option<f64>> {
        (0..self.n_events).map(|j| self.get(row, j)).collect()
    }

    pub fn n_rows(&self) -> usize {
        if self.n_events == 0 {
            0
        } else {
            self.values.len() / self.n_events
        }
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }
}

pub fn event_percentiles(table: &PerformanceTable) -> PercentileGrid {
    let n = table.n_athletes();
    let p = table.n_events();
    let mut values = vec![f64::NAN; n * p];
    let higher_better = table.parameterization().higher_is_better();
    for j in 0..p {
        let mut col: Vec<(f64, usize)> =
            (0..n).filter_map(|i| table.get(i, j).map(|v| (if higher_better { -v } else { v }, i))).collect();
        let m = col.len();
        if m == 0 {
            continue;
        }
        if m == 1 {
            values[col[0].1 * p + j] = 50.0;
            continue;
        }
        // Sort worst (largest time) first; the count of strictly worse entries is the start of the tie group.
        col.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut start = 0;
        while start < m {
            let mut end = start + 1;
            while end < m && col[end].0 == col[start].0 {
                end += 1;
            }
            let ties = (end - start) as f64;
            let pct = 100.0 * (start as f64 + (ties - 1.0) / 2.0) / (m - 1) as f64;
            for &(_, i) in &col[start..end] {
                values[i * p + j] = pct;
            }
            start = end;
        }
    }
    PercentileGrid { n_events: p, values }
}

/// Percentile a value would receive if added to `column` (time-like: lower is better).
pub fn percentile_against(column: &[f64], value: f64, higher_is_better: bool) -> f64 {
    if column.is_empty() {
        return 50.0;
    }
    let (worse, ties) = column.iter().fold((0usize, 0usize), |(w, t), &c| {
        let is_worse = if higher_is_better { c < value } else { c > value };
        (w + is_worse as usize, t + (c == value) as usize)
    });
    100.0 * (worse as f64 + ties as f64 / 2.0) / column.len() as f64
}

/// Geometric mean of attempted distances.
pub fn preferred_distance(distances: &[f64]) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::NoAttempts);
    }
    if distances.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::invalid("distances must be positive"));
    }
    let mean_log = distances.iter().map(|d| d.ln()).sum::<f64>() / distances.len() as f64;
    Ok(mean_log.exp())
}

/// Arithmetic mean of the present percentiles.
pub fn training_standard(percentiles: &[Option<f64>]) -> Result<f64> {
    let present: Vec<f64> = percentiles.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::NoAttempts);
    }
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AthleteSummary {
    pub percentiles: Vec<Option<f64>>,
    pub preferred_distance: f64,
    pub training_standard: f64,
    pub n_events: usize,
}

pub fn athlete_summary(table: &PerformanceTable, grid: &PercentileGrid, row: usize) -> Result<AthleteSummary> {
    let cols = table.present_cols(row);
    let distances: Vec<f64> = cols.iter().map(|&j| table.catalog().distance(j)).collect();
    let percentiles = grid.row(row);
    Ok(AthleteSummary {
        preferred_distance: preferred_distance(&distances)?,
        training_standard: training_standard(&percentiles)?,
        n_events: cols.len(),
        percentiles,
    })
}

/// Summaries for every row; rows without entries yield `None`.
pub fn summaries(table: &PerformanceTable) -> Vec<Option<AthleteSummary>> {
    let grid = event_percentiles(table);
    (0..table.n_athletes()).map(|i| athlete_summary(table, &grid, i).ok()).collect()
}
