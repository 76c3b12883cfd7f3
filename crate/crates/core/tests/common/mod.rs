#![allow(dead_code)]

use rand::Rng;
use runlmc::datamodel::{Event, EventCatalog, Parameterization, PerformanceTable};

pub fn catalog(distances: &[f64]) -> EventCatalog {
    EventCatalog::new(distances.iter().map(|&d| Event { label: format!("{d}m"), distance: d }).collect()).unwrap()
}

pub fn table(distances: &[f64], rows: &[Vec<Option<f64>>], p: Parameterization) -> PerformanceTable {
    PerformanceTable::from_rows(catalog(distances), rows, p).unwrap()
}

pub fn standard_table(rows: &[Vec<Option<f64>>], p: Parameterization) -> PerformanceTable {
    PerformanceTable::from_rows(EventCatalog::standard(), rows, p).unwrap()
}

/// Dense rows of a rank-`r` matrix `U V^T` with factors drawn from `range`.
pub fn low_rank_rows<R: Rng>(rng: &mut R, n: usize, p: usize, r: usize, range: std::ops::Range<f64>) -> Vec<Vec<f64>> {
    let u: Vec<Vec<f64>> = (0..n).map(|_| (0..r).map(|_| rng.random_range(range.clone())).collect()).collect();
    let v: Vec<Vec<f64>> = (0..p).map(|_| (0..r).map(|_| rng.random_range(range.clone())).collect()).collect();
    u.iter().map(|ui| v.iter().map(|vj| ui.iter().zip(vj).map(|(a, b)| a * b).sum()).collect()).collect()
}

pub fn dense(rows: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    rows.iter().map(|r| r.iter().map(|v| Some(*v)).collect()).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
