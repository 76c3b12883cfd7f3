//! Low-rank model extraction: components, per-athlete coefficients and
//! world-record fits.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datamodel::{EventCatalog, Parameterization, PerformanceTable};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientScaling {
    /// `lambda = U * S`, so `sum_i lambda_i f_i` reconstructs the table.
    #[default]
    Singular,
    /// `lambda = U`, unit-norm coefficient columns.
    PureU,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentModel {
    pub catalog: EventCatalog,
    pub parameterization: Parameterization,
    pub scaling: CoefficientScaling,
    /// `components[i][j]`: component `i` at event `j`; orthonormal rows.
    pub components: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    /// `coefficients[k][i]`: athlete `k`'s coefficient on component `i`.
    pub coefficients: Vec<Vec<f64>>,
    pub athlete_ids: Vec<u64>,
}

impl ComponentModel {
    pub fn rank(&self) -> usize {
        self.components.len()
    }

    /// Model value of athlete `row` at every event.
    pub fn reconstruct_row(&self, row: usize) -> Vec<f64> {
        let scale = |i: usize| match self.scaling {
            CoefficientScaling::Singular => 1.0,
            CoefficientScaling::PureU => self.singular_values[i],
        };
        (0..self.catalog.len())
            .map(|j| (0..self.rank()).map(|i| self.coefficients[row][i] * scale(i) * self.components[i][j]).sum())
            .collect()
    }
}

/// Signs each component deterministically: the first so that its inner
/// product with log-distance is positive, the others so that their value at
/// the longest event is positive (scanning shorter events if it is zero).
fn sign_of(i: usize, comp: &[f64], log_d: &[f64]) -> f64 {
    let key = if i == 0 {
        comp.iter().zip(log_d).map(|(a, b)| a * b).sum::<f64>()
    } else {
        comp.iter().rev().copied().find(|v| *v != 0.0).unwrap_or(0.0)
    };
    if key < 0.0 { -1.0 } else { 1.0 }
}

/// Truncated SVD of a complete table: components are the leading right
/// singular vectors.
pub fn extract_components(table: &PerformanceTable, r: usize, scaling: CoefficientScaling) -> Result<ComponentModel> {
    if !table.is_complete() {
        return Err(Error::invalid("component extraction needs a complete table"));
    }
    let (n, p) = (table.n_athletes(), table.n_events());
    if r == 0 || r > p.min(n) {
        return Err(Error::invalid(format!("rank {r} outside 1..={}", p.min(n))));
    }
    let m = DMatrix::from_row_slice(n, p, table.raw());
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let top = svd.singular_values[order[0]];
    if !(top > 0.0) || svd.singular_values[order[r - 1]] <= RANK_TOL * top {
        return Err(Error::invalid(format!("rank {r} exceeds the numerical rank of the table")));
    }
    let log_d = table.catalog().log_distances();
    let mut components = Vec::with_capacity(r);
    let mut singular_values = Vec::with_capacity(r);
    for (i, &k) in order.iter().take(r).enumerate() {
        let mut c: Vec<f64> = v_t.row(k).iter().copied().collect();
        let s = sign_of(i, &c, &log_d);
        c.iter_mut().for_each(|v| *v *= s);
        components.push(c);
        singular_values.push(svd.singular_values[k]);
    }
    // Coefficients by projection, lambda = M V (= U S); pure U divides by S.
    let coefficients = (0..n)
        .map(|a| {
            (0..r)
                .map(|i| {
                    let proj: f64 = (0..p).map(|j| m[(a, j)] * components[i][j]).sum();
                    match scaling {
                        CoefficientScaling::Singular => proj,
                        CoefficientScaling::PureU => proj / singular_values[i],
                    }
                })
                .collect()
        })
        .collect();
    Ok(ComponentModel {
        catalog: table.catalog().clone(),
        parameterization: table.parameterization(),
        scaling,
        components,
        singular_values,
        coefficients,
        athlete_ids: table.athletes().iter().map(|a| a.athlete_id).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line of a component against log-distance. A constant
/// component has `r_squared = 0`.
pub fn individual_exponent_diagnostic(f1: &[f64], catalog: &EventCatalog) -> Result<LinearFit> {
    let x = catalog.log_distances();
    if f1.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: format!("{} values", x.len()), got: format!("{}", f1.len()) });
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, f1.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(f1).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = f1.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).min(1.0) } else { 0.0 };
    Ok(LinearFit { slope, intercept, r_squared })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorldRecordFit {
    pub rank: usize,
    pub coefficients: Vec<f64>,
    /// Fitted record times in seconds.
    pub fitted: Vec<f64>,
    /// Log-time residuals, record minus fit.
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
}

/// Least-squares fit of the log record times on the first `r` components.
pub fn fit_world_records(wr_times: &[f64], model: &ComponentModel, r: usize) -> Result<WorldRecordFit> {
    let p = model.catalog.len();
    if wr_times.len() != p {
        return Err(Error::DimensionMismatch { expected: format!("{p} records"), got: format!("{}", wr_times.len()) });
    }
    if r == 0 || r > model.rank() {
        return Err(Error::invalid(format!("rank {r} outside 1..={}", model.rank())));
    }
    if wr_times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("record times must be positive"));
    }
    let y: Vec<f64> = wr_times.iter().map(|t| t.ln()).collect();
    // Orthonormal components: least squares is projection.
    let coefficients: Vec<f64> =
        (0..r).map(|i| model.components[i].iter().zip(&y).map(|(f, v)| f * v).sum()).collect();
    let fit_log: Vec<f64> = (0..p).map(|j| (0..r).map(|i| coefficients[i] * model.components[i][j]).sum()).collect();
    let residuals: Vec<f64> = y.iter().zip(&fit_log).map(|(a, b)| a - b).collect();
    let residual_norm = residuals.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(WorldRecordFit { rank: r, coefficients, fitted: fit_log.iter().map(|v| v.exp()).collect(), residuals, residual_norm })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThreeNumberSummary {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

pub fn three_number_summary(model: &ComponentModel, row: usize) -> Result<ThreeNumberSummary> {
    if model.rank() < 3 {
        return Err(Error::invalid("three-number summary needs a model of rank at least 3"));
    }
    let c = model.coefficients.get(row).ok_or_else(|| Error::invalid(format!("athlete row {row} outside the model")))?;
    Ok(ThreeNumberSummary { lambda1: c[0], lambda2: c[1], lambda3: c[2] })
}

/// Factor turning `lambda_1` into a power-law exponent: the slope of `f_1`
/// against log-distance.
pub fn exponent_scale(model: &ComponentModel) -> Result<f64> {
    Ok(individual_exponent_diagnostic(&model.components[0], &model.catalog)?.slope)
}

#[derive(Debug, Deserialize)]
struct RecordFile {
    events: BTreeMap<String, Vec<(NaiveDate, f64)>>,
}

/// Record progression per event label, oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordHistory {
    pub events: BTreeMap<String, Vec<(NaiveDate, f64)>>,
}

impl RecordHistory {
    pub fn from_json(s: &str) -> Result<Self> {
        let f: RecordFile = serde_json::from_str(s)?;
        let mut events = f.events;
        for (label, marks) in events.iter_mut() {
            marks.sort_by_key(|m| m.0);
            if marks.is_empty() || marks.iter().any(|m| !(m.1 > 0.0)) {
                return Err(Error::invalid(format!("record history for {label} is empty or non-positive")));
            }
        }
        Ok(RecordHistory { events })
    }

    pub fn bundled() -> &'static RecordHistory {
        static H: OnceLock<RecordHistory> = OnceLock::new();
        H.get_or_init(|| {
            RecordHistory::from_json(include_str!("../data/world_records.json")).expect("bundled records parse")
        })
    }

    /// The record in force on `date`; before the first listed mark, the
    /// first mark.
    pub fn in_force(&self, label: &str, date: NaiveDate) -> Option<f64> {
        let marks = self.events.get(label)?;
        let k = marks.partition_point(|m| m.0 <= date);
        Some(marks[k.saturating_sub(1)].1)
    }

    pub fn current(&self, label: &str) -> Option<f64> {
        self.events.get(label).and_then(|m| m.last()).map(|m| m.1)
    }

    /// Current record for every catalog event.
    pub fn current_for(&self, catalog: &EventCatalog) -> Result<Vec<f64>> {
        catalog
            .events()
            .iter()
            .map(|e| self.current(&e.label).ok_or_else(|| Error::invalid(format!("no world record for {}", e.label))))
            .collect()
    }
}
